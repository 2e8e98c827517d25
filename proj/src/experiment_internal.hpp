#pragma once

#include <cstdint>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dynwalk/experiment.hpp"

namespace dynwalk::detail {

/// Typed access to experiment overrides; keys outside `allowed` are rejected up front.
class Knobs {
 public:
  Knobs(const std::string& experiment, const KeyValues& kv, std::initializer_list<const char*> allowed);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  double real(const std::string& key, double fallback) const;
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> reals(const std::string& key, std::vector<double> fallback) const;
  std::vector<int> integers(const std::string& key, std::vector<int> fallback) const;
  std::vector<std::string> words(const std::string& key, std::vector<std::string> fallback) const;

 private:
  const std::string* find(const std::string& key) const;
  std::string experiment_;
  KeyValues kv_;
  std::set<std::string> allowed_;
};

std::string num(double v);

/// Graph from `graph_file` when given, otherwise generate_regular(n, d, seed).
Graph experiment_graph(const Params& params, const Knobs& knobs);

/// Validated params with defaults filled in.
Params checked_params(const Params& params);

std::vector<InitFamily> parse_families(const std::vector<std::string>& names);

/// Rows of a CSV built incrementally.
class Csv {
 public:
  explicit Csv(const std::string& header) { out_ << header << '\n'; }
  template <class... Cols>
  void row(const Cols&... cols) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cols), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class T>
  static std::string cell(const T& v) { return std::to_string(v); }
  std::ostringstream out_;
};

}  // namespace dynwalk::detail
