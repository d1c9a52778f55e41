#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "unifield/fasrm.hpp"
#include "unifield/flow.hpp"
#include "unifield/preprocess.hpp"
#include "unifield/synth.hpp"
#include "unifield/velocity_net.hpp"

namespace unifield {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key = value` run configuration. Every key has a registered default;
/// unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);
  void merge_text(const std::string& text, const std::string& origin = "<text>");
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  std::filesystem::path out_dir() const { return get("out_dir"); }
  std::uint64_t seed() const;
  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;
  Shape shape(const std::string& key) const;

  FasrmConfig fasrm() const;
  TrainConfig train() const;
  ModelConfig model() const;
  SamplerConfig sampler() const;
  PreprocessConfig preprocess() const;
  PhantomSpec phantom() const;

  std::filesystem::path checkpoint_path() const;
  std::filesystem::path manifest_path() const;

  /// Sorted `key = value` lines, one per registered key.
  std::string resolved_text() const;
  void write_resolved(const std::filesystem::path& dir) const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

/// Shortest round-trip decimal text for a double ("inf" for infinity).
std::string format_real(double v);

}  // namespace unifield
