#ifndef FDCTMC_REPORT_HPP
#define FDCTMC_REPORT_HPP

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace fdctmc {

/// Human-readable text plus an ordered key-value block. The block is what the
/// C API and the CLI emit as the machine-readable section; numbers are printed
/// with 17 significant digits so they re-parse to the same doubles.
struct Report {
  std::string text;
  std::vector<std::pair<std::string, std::string>> kv;

  void put(const std::string& key, const std::string& value) { kv.push_back({key, value}); }

  void put(const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    kv.push_back({key, buf});
  }

  void put(const std::string& key, long long value) { kv.push_back({key, std::to_string(value)}); }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : kv)
      if (k == key) return &v;
    return nullptr;
  }

  std::string kv_block() const {
    std::string out = "[report]\n";
    for (const auto& [k, v] : kv) {
      if (v.find('\n') != std::string::npos) continue;  // the block stays line-oriented
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }
};

}  // namespace fdctmc

#endif
