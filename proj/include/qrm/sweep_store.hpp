#pragma once

// Sweep records on disk: one header line `#qrm-sweep v1 {json}` followed by a
// CSV table, one row per grid point. Numbers carry 17 significant digits so a
// reload reproduces every double exactly. A cache directory maps the content
// hash of the computation key to `<hash>.qrms`.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrm/errors.hpp"

namespace qrm {

inline constexpr int kSweepSchemaVersion = 1;
inline constexpr std::string_view kCodeVersion = "qrm-1.0";

struct GridSpec {
  double gbar_min = 0.0;
  double gbar_max = 0.0;
  int steps = 0;

  bool operator==(const GridSpec&) const = default;
};

/// Everything that determines the numbers in a sweep; the hash covers exactly
/// this and nothing from the payload.
struct SweepKey {
  double frequency = 0.0;
  double splitting = 1.0;
  GridSpec grid;
  std::string method;
  double tolerance = 0.0;
  double step = 0.0;
  std::string code_version{kCodeVersion};

  bool operator==(const SweepKey&) const = default;
};

struct SweepRecord {
  int schema_version = kSweepSchemaVersion;
  SweepKey key;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> status;  ///< one entry per row, "ok" when the point succeeded

  bool operator==(const SweepRecord&) const = default;
};

inline nlohmann::json to_json(const SweepKey& k) {
  return {{"frequency", k.frequency},
          {"splitting", k.splitting},
          {"grid", {{"gbar_min", k.grid.gbar_min}, {"gbar_max", k.grid.gbar_max}, {"steps", k.grid.steps}}},
          {"method", k.method},
          {"tolerance", k.tolerance},
          {"step", k.step},
          {"code_version", k.code_version}};
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return {buf, res.ptr};
}

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Key serialization with sorted fields and round-trip number formatting.
inline std::string canonical_key(const SweepKey& k) {
  std::ostringstream s;
  s << "code_version=" << k.code_version << ";frequency=" << format_double(k.frequency)
    << ";gbar_max=" << format_double(k.grid.gbar_max)
    << ";gbar_min=" << format_double(k.grid.gbar_min) << ";method=" << k.method
    << ";splitting=" << format_double(k.splitting) << ";step=" << format_double(k.step)
    << ";steps=" << k.grid.steps << ";tolerance=" << format_double(k.tolerance);
  return s.str();
}

inline bool plain_field(std::string_view s) {
  return s.find_first_of(",\n\r\"") == std::string_view::npos;
}

}  // namespace detail

inline std::string sweep_hash(const SweepKey& key) {
  char buf[17];
  const auto h = detail::fnv1a(detail::canonical_key(key));
  const auto res = std::to_chars(buf, buf + sizeof buf, h, 16);
  std::string hex(buf, res.ptr);
  return std::string(16 - hex.size(), '0') + hex;
}

/// Serialized form; throws ContractError on NaN/inf payloads or ragged rows.
inline std::string serialize(const SweepRecord& r) {
  if (r.status.size() != r.rows.size()) throw ContractError("one status entry per row required");
  for (const auto& c : r.columns)
    if (!detail::plain_field(c) || c.empty() || c == "status")
      throw ContractError("invalid column name '" + c + "'");
  nlohmann::json header = {{"key", to_json(r.key)},
                           {"hash", sweep_hash(r.key)},
                           {"columns", r.columns},
                           {"rows", r.rows.size()}};
  std::string out = "#qrm-sweep v" + std::to_string(r.schema_version) + " " + header.dump() + "\n";
  for (const auto& c : r.columns) out += c + ",";
  out += "status\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    if (row.size() != r.columns.size()) throw ContractError("row width does not match columns");
    for (double v : row) {
      if (!std::isfinite(v)) throw ContractError("non-finite value in row " + std::to_string(i));
      out += detail::format_double(v) + ",";
    }
    if (!detail::plain_field(r.status[i])) throw ContractError("status text must be a plain field");
    out += r.status[i] + "\n";
  }
  return out;
}

namespace detail {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  std::size_t offset() const { return pos_; }

  std::string_view line() {
    const std::size_t end = text_.find('\n', pos_);
    if (end == std::string_view::npos) throw ParseError("unterminated line", pos_);
    const auto out = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline SweepKey key_from_json(const nlohmann::json& j) {
  SweepKey k;
  k.frequency = j.at("frequency").get<double>();
  k.splitting = j.at("splitting").get<double>();
  const auto& g = j.at("grid");
  k.grid = {g.at("gbar_min").get<double>(), g.at("gbar_max").get<double>(), g.at("steps").get<int>()};
  k.method = j.at("method").get<std::string>();
  k.tolerance = j.at("tolerance").get<double>();
  k.step = j.at("step").get<double>();
  k.code_version = j.at("code_version").get<std::string>();
  return k;
}

}  // namespace detail

inline SweepRecord parse(std::string_view text) {
  detail::Reader in(text);
  const std::string_view magic = "#qrm-sweep v";
  const auto first = in.line();
  if (first.substr(0, magic.size()) != magic) throw ParseError("missing sweep header", 0);
  const std::size_t space = first.find(' ', magic.size());
  if (space == std::string_view::npos) throw ParseError("malformed sweep header", magic.size());
  int version = 0;
  const auto vtext = first.substr(magic.size(), space - magic.size());
  if (std::from_chars(vtext.data(), vtext.data() + vtext.size(), version).ec != std::errc{})
    throw ParseError("malformed schema version", magic.size());
  if (version != kSweepSchemaVersion) throw MigrationNeededError(version, kSweepSchemaVersion);

  SweepRecord r;
  std::size_t expected_rows = 0;
  try {
    const auto header = nlohmann::json::parse(first.substr(space + 1));
    r.key = detail::key_from_json(header.at("key"));
    r.columns = header.at("columns").get<std::vector<std::string>>();
    expected_rows = header.at("rows").get<std::size_t>();
    if (header.at("hash").get<std::string>() != sweep_hash(r.key))
      throw ParseError("header hash does not match its key", space + 1);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("header json: ") + e.what(), space + (e.byte > 0 ? e.byte : 1));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("header json: ") + e.what(), space + 1);
  }

  const std::size_t names_at = in.offset();
  std::string names;
  for (const auto& c : r.columns) names += c + ",";
  names += "status";
  if (in.line() != names) throw ParseError("column line does not match header", names_at);

  while (!in.done()) {
    const std::size_t row_at = in.offset();
    const auto line = in.line();
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      const auto at = row_at + static_cast<std::size_t>(p - line.data());
      if (res.ec != std::errc{} || res.ptr == end || *res.ptr != ',')
        throw ParseError("bad number in column '" + r.columns[c] + "'", at);
      if (!std::isfinite(v)) throw ParseError("non-finite number", at);
      row.push_back(v);
      p = res.ptr + 1;
    }
    r.rows.push_back(std::move(row));
    r.status.emplace_back(p, end);
  }
  if (r.rows.size() != expected_rows)
    throw ParseError("expected " + std::to_string(expected_rows) + " rows, found " +
                         std::to_string(r.rows.size()),
                     in.offset());
  return r;
}

/// Writes through a sibling temporary file and a rename, so readers never see
/// a partial record.
inline void save(const SweepRecord& record, const std::filesystem::path& path) {
  const std::string text = serialize(record);
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline SweepRecord load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

/// flock on `<dir>/.lock`, held for the object's lifetime.
class DirectoryLock {
 public:
  DirectoryLock(const std::filesystem::path& dir, bool exclusive) {
    std::filesystem::create_directories(dir);
    const auto file = dir / ".lock";
    fd_ = ::open(file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + file.string());
    if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      ::close(fd_);
      throw Error("cannot lock " + file.string());
    }
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;
  ~DirectoryLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }

 private:
  int fd_ = -1;
};

inline std::filesystem::path cache_path(const std::filesystem::path& dir, const std::string& hash) {
  return dir / (hash + ".qrms");
}

/// Cached record for `hash`, if one exists and its key hashes to it.
inline std::optional<SweepRecord> lookup(const std::filesystem::path& dir, const std::string& hash) {
  if (!std::filesystem::exists(dir)) return std::nullopt;
  DirectoryLock lock(dir, false);
  const auto path = cache_path(dir, hash);
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto record = load(path);
  if (sweep_hash(record.key) != hash) return std::nullopt;
  return record;
}

inline std::filesystem::path store(const std::filesystem::path& dir, const SweepRecord& record) {
  DirectoryLock lock(dir, true);
  const auto path = cache_path(dir, sweep_hash(record.key));
  save(record, path);
  return path;
}

}  // namespace qrm
