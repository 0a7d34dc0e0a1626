#pragma once

#include <string>
#include <vector>

namespace brwlab {

struct GalleryEntry {
  std::string name;
  std::string text;  // config file contents
};

// Shipped scenarios; gallery/<name>.cfg holds the same text.
const std::vector<GalleryEntry>& gallery();

}  // namespace brwlab
