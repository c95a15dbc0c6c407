#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsallis_lab/rng.hpp"

namespace tsallis_lab {

/// Invalid experiment configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ArmKind {
  kBernoulli,
  kUniform,  // uniform of width w centred at the mean, clamped to [0, 1]
};

/// Stochastic instance: per-arm mean losses with a unique optimal arm.
class InstanceSpec {
 public:
  /// Throws ConfigError if a mean is outside [0, 1], the argmin of the means
  /// is not unique, or the uniform width is not in (0, 1].
  explicit InstanceSpec(std::vector<double> means, ArmKind kind = ArmKind::kBernoulli,
                        double width = 0.5);

  std::size_t arms() const { return means_.size(); }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& gaps() const { return gaps_; }
  std::size_t star() const { return star_; }
  /// Smallest positive gap; 0 when there is a single arm.
  double min_gap() const { return min_gap_; }
  double max_gap() const;
  ArmKind kind() const { return kind_; }
  double width() const { return width_; }

 private:
  std::vector<double> means_;
  std::vector<double> gaps_;
  std::size_t star_ = 0;
  double min_gap_ = 0.0;
  ArmKind kind_;
  double width_;
};

/// Loss vector for round t (1-based), using arm i's lane of the environment
/// stream. Bernoulli arms emit 1 iff u < mean.
std::vector<double> draw_losses(const InstanceSpec& spec, const RngStream& rng,
                                std::uint64_t round);
void draw_losses(const InstanceSpec& spec, const RngStream& rng, std::uint64_t round,
                 std::span<double> out);

/// Fixed table of losses, one row per round.
class ReplayTable {
 public:
  /// Rows must be non-empty, of equal width, with every entry in [0, 1].
  explicit ReplayTable(std::vector<std::vector<double>> rows);

  /// Comma-separated values, one row per line, no header. Blank lines are
  /// skipped. Throws ConfigError on malformed content.
  static ReplayTable parse(std::istream& in);
  /// Throws std::runtime_error if the file cannot be opened.
  static ReplayTable load(const std::filesystem::path& path);

  std::size_t rounds() const { return rows_.size(); }
  std::size_t arms() const { return rows_.front().size(); }

  /// Row t, 1-based. Throws std::out_of_range outside [1, rounds()].
  const std::vector<double>& losses(std::size_t t) const;

 private:
  std::vector<std::vector<double>> rows_;
};

/// Free-function form of ReplayTable::losses.
inline const std::vector<double>& replay_losses(const ReplayTable& table, std::size_t t) {
  return table.losses(t);
}

}  // namespace tsallis_lab
