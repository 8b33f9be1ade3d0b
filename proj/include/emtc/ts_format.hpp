#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "emtc/dataset.hpp"

namespace emtc {
namespace ts_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_value(const std::string& tok, int line_no) {
  const std::string t = trim(tok);
  if (t.empty()) throw FormatError("ts parse: empty value at line " + std::to_string(line_no));
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw FormatError("ts parse: bad numeric value '" + t + "' at line " + std::to_string(line_no));
  if (!std::isfinite(v))
    throw FormatError("ts parse: non-finite value at line " + std::to_string(line_no));
  return v;
}

}  // namespace ts_detail

/// Parse the UEA `.ts` sequence format from a stream. Header lines begin
/// with `@`; after `@data`, each line is one case with `:`-separated
/// dimensions, comma-separated values, and (when `@classLabel true`) the
/// class token after the final colon. Unequal-length cases are zero-padded
/// to the longest observed length.
inline TimeSeriesDataset parse_ts_stream(std::istream& in, const std::string& default_name) {
  using namespace ts_detail;

  std::string name = default_name;
  bool class_label = false;
  std::vector<std::string> class_names;
  std::optional<int> declared_dims;
  std::optional<int> declared_length;
  bool in_data = false;

  std::vector<std::vector<std::vector<double>>> cases;  // case -> dim -> values
  std::vector<std::string> case_labels;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    if (!in_data && line[0] == '@') {
      std::istringstream hs(line);
      std::string key;
      hs >> key;
      key = lower(key.substr(1));
      if (key.empty())
        throw FormatError("ts parse: malformed header at line " + std::to_string(line_no) + ": '" + raw + "'");
      if (key == "problemname") {
        std::string v;
        if (hs >> v) name = v;
      } else if (key == "dimensions") {
        int v;
        if (!(hs >> v) || v < 1)
          throw FormatError("ts parse: malformed @dimensions at line " + std::to_string(line_no));
        declared_dims = v;
      } else if (key == "serieslength") {
        int v;
        if (!(hs >> v) || v < 1)
          throw FormatError("ts parse: malformed @seriesLength at line " + std::to_string(line_no));
        declared_length = v;
      } else if (key == "univariate") {
        std::string v;
        hs >> v;
        if (lower(v) == "true") declared_dims = 1;
      } else if (key == "classlabel") {
        std::string v;
        if (!(hs >> v))
          throw FormatError("ts parse: malformed @classLabel at line " + std::to_string(line_no));
        class_label = (lower(v) == "true");
        std::string tok;
        while (hs >> tok) class_names.push_back(tok);
      } else if (key == "data") {
        in_data = true;
      }
      // remaining header keys (@timeStamps, @missing, ...) carry no load here
      continue;
    }

    if (!in_data)
      throw FormatError("ts parse: data before @data at line " + std::to_string(line_no));

    std::vector<std::string> parts = split(line, ':');
    if (class_label) {
      if (parts.size() < 2)
        throw FormatError("ts parse: missing class label at line " + std::to_string(line_no));
      case_labels.push_back(trim(parts.back()));
      parts.pop_back();
    }
    if (parts.empty())
      throw FormatError("ts parse: empty case at line " + std::to_string(line_no));

    std::vector<std::vector<double>> dims;
    dims.reserve(parts.size());
    for (const std::string& dim_str : parts) {
      std::vector<double> vals;
      for (const std::string& tok : split(dim_str, ',')) vals.push_back(parse_value(tok, line_no));
      dims.push_back(std::move(vals));
    }
    for (std::size_t k = 1; k < dims.size(); ++k)
      if (dims[k].size() != dims[0].size())
        throw FormatError("ts parse: ragged dimensions within case at line " + std::to_string(line_no));
    if (declared_dims && static_cast<int>(dims.size()) != *declared_dims)
      throw FormatError("ts parse: case has " + std::to_string(dims.size()) + " dimensions, expected " +
                        std::to_string(*declared_dims) + " at line " + std::to_string(line_no));
    if (declared_length && static_cast<int>(dims[0].size()) != *declared_length)
      throw FormatError("ts parse: case length " + std::to_string(dims[0].size()) + " != @seriesLength at line " +
                        std::to_string(line_no));
    cases.push_back(std::move(dims));
  }

  if (cases.empty()) throw EmptyDataError("ts parse: empty data section in '" + name + "'");

  const int N = static_cast<int>(cases.size());
  const int D = static_cast<int>(cases[0].size());
  for (int i = 0; i < N; ++i)
    if (static_cast<int>(cases[i].size()) != D)
      throw FormatError("ts parse: case " + std::to_string(i) + " has inconsistent dimension count");

  int T = 0;
  for (const auto& c : cases) T = std::max(T, static_cast<int>(c[0].size()));

  TimeSeriesDataset ds;
  ds.name = name;
  ds.samples = Tensor3(N, T, D);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < D; ++c)
      for (std::size_t j = 0; j < cases[i][c].size(); ++j)
        ds.samples(i, static_cast<int>(j), c) = cases[i][c][j];

  if (class_label) {
    // Remap tokens to contiguous 0..g-1. Declared @classLabel order wins;
    // tokens absent from the data are compressed out.
    std::map<std::string, int> order;
    if (!class_names.empty()) {
      for (std::size_t k = 0; k < class_names.size(); ++k)
        order[class_names[k]] = static_cast<int>(k);
      for (const std::string& tok : case_labels)
        if (!order.count(tok))
          throw FormatError("ts parse: class token '" + tok + "' not in @classLabel declaration");
    } else {
      std::vector<std::string> uniq = case_labels;
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      for (std::size_t k = 0; k < uniq.size(); ++k) order[uniq[k]] = static_cast<int>(k);
    }
    std::map<int, int> seen;  // declared index -> compact index, in declared order
    for (const std::string& tok : case_labels) seen.emplace(order[tok], 0);
    int next = 0;
    for (auto& kv : seen) kv.second = next++;
    ds.labels.reserve(N);
    for (const std::string& tok : case_labels) ds.labels.push_back(seen[order[tok]]);
    ds.g_hint = next;
  }
  return ds;
}

inline TimeSeriesDataset parse_ts_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open ts file: " + path);
  std::string stem = path;
  std::size_t slash = stem.find_last_of("/\\");
  if (slash != std::string::npos) stem = stem.substr(slash + 1);
  std::size_t dot = stem.find_last_of('.');
  if (dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_ts_stream(in, stem);
}

/// Serialize back to the `.ts` format (17 significant digits, so a
/// parse/serialize round trip reproduces values exactly).
inline void serialize_ts(const TimeSeriesDataset& ds, std::ostream& out) {
  out << "@problemName " << (ds.name.empty() ? "unnamed" : ds.name) << "\n";
  out << "@timeStamps false\n";
  out << "@missing false\n";
  if (ds.d() == 1)
    out << "@univariate true\n";
  else
    out << "@dimensions " << ds.d() << "\n";
  out << "@equalLength true\n";
  out << "@seriesLength " << ds.t() << "\n";
  if (ds.has_labels()) {
    out << "@classLabel true";
    for (int c = 0; c < ds.g_hint; ++c) out << " " << c;
    out << "\n";
  } else {
    out << "@classLabel false\n";
  }
  out << "@data\n";
  char buf[40];
  for (int i = 0; i < ds.n(); ++i) {
    for (int c = 0; c < ds.d(); ++c) {
      if (c > 0) out << ":";
      for (int j = 0; j < ds.t(); ++j) {
        if (j > 0) out << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", ds.samples(i, j, c));
        out << buf;
      }
    }
    if (ds.has_labels()) out << ":" << ds.labels[i];
    out << "\n";
  }
}

inline void serialize_ts_file(const TimeSeriesDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write ts file: " + path);
  serialize_ts(ds, out);
}

}  // namespace emtc
