#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace brwlab {

// Shortest text that reads back to the same double; "inf", "-inf", "nan".
std::string format_number(double x);

std::string sha256_hex(std::string_view data);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);

  Csv& cell(double x);
  Csv& cell(std::uint64_t x);
  Csv& cell(std::string_view s);
  Csv& cell(bool b) { return cell(std::string_view(b ? "true" : "false")); }
  void end_row();

  const std::string& str() const { return text_; }

 private:
  void sep();
  std::size_t columns_;
  std::size_t filled_ = 0;
  std::string text_;
};

struct FileEntry {
  std::string path;  // relative to the artifact directory
  std::uintmax_t bytes;
  std::string sha256;
};

// Writes files into one directory and records their hashes.
class ArtifactDir {
 public:
  explicit ArtifactDir(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, const std::string& content);
  const std::vector<FileEntry>& files() const { return files_; }

  // manifest.json: the listed files plus status and, for partial runs, the error.
  void write_manifest(const std::string& scenario, const std::string& experiment, bool complete,
                      const std::string& error = {});

 private:
  std::filesystem::path dir_;
  std::vector<FileEntry> files_;
};

}  // namespace brwlab
