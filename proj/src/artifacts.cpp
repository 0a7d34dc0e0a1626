#include "brwlab/artifacts.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>

#include "brwlab/error.hpp"
#include "json.hpp"

namespace brwlab {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Csv::Csv(std::vector<std::string> header) : columns_(header.size()) {
  for (const auto& h : header) cell(std::string_view(h));
  end_row();
}

void Csv::sep() {
  if (filled_ > 0) text_ += ',';
  ++filled_;
}

Csv& Csv::cell(double x) {
  sep();
  text_ += format_number(x);
  return *this;
}

Csv& Csv::cell(std::uint64_t x) {
  sep();
  text_ += std::to_string(x);
  return *this;
}

Csv& Csv::cell(std::string_view s) {
  sep();
  if (s.find_first_of(",\"\n") == std::string_view::npos) {
    text_ += s;
    return *this;
  }
  text_ += '"';
  for (char c : s) {
    if (c == '"') text_ += '"';
    text_ += c;
  }
  text_ += '"';
  return *this;
}

void Csv::end_row() {
  if (filled_ != columns_) throw Error("CSV row has " + std::to_string(filled_) + " cells, expected " +
                                       std::to_string(columns_));
  text_ += '\n';
  filled_ = 0;
}

ArtifactDir::ArtifactDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void ArtifactDir::write(const std::string& name, const std::string& content) {
  auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw Error("cannot write " + path.string());
  files_.push_back({name, content.size(), sha256_hex(content)});
}

void ArtifactDir::write_manifest(const std::string& scenario, const std::string& experiment, bool complete,
                                 const std::string& error) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["experiment"] = experiment;
  j["status"] = complete ? "complete" : "partial";
  if (!error.empty()) j["error"] = error;
  auto files = nlohmann::ordered_json::array();
  for (const auto& f : files_) files.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  j["files"] = files;
  std::string text = j.dump(2) + "\n";
  std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write manifest in " + dir_.string());
}

}  // namespace brwlab
