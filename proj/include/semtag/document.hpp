#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

namespace semtag::corpus {

struct Document {
  std::string doc_id;  ///< file name without extension
  std::string raw_text;
  std::filesystem::path source_path;
  std::size_t replaced_sequences = 0;  ///< invalid UTF-8 sequences replaced on read
};

}  // namespace semtag::corpus
