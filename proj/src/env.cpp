#include "tsallis_lab/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace tsallis_lab {

InstanceSpec::InstanceSpec(std::vector<double> means, ArmKind kind, double width)
    : means_(std::move(means)), kind_(kind), width_(width) {
  if (means_.empty()) throw ConfigError("instance needs at least one arm");
  for (double m : means_) {
    if (!std::isfinite(m) || m < 0.0 || m > 1.0) {
      throw ConfigError("arm means must lie in [0, 1]");
    }
  }
  if (kind_ == ArmKind::kUniform && !(width_ > 0.0 && width_ <= 1.0)) {
    throw ConfigError("uniform arm width must lie in (0, 1]");
  }
  star_ = static_cast<std::size_t>(std::min_element(means_.begin(), means_.end()) - means_.begin());
  const double best = means_[star_];
  gaps_.resize(means_.size());
  min_gap_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < means_.size(); ++i) {
    gaps_[i] = means_[i] - best;
    if (i == star_) continue;
    if (gaps_[i] <= 0.0) {
      std::ostringstream msg;
      msg << "arms " << star_ + 1 << " and " << i + 1
          << " share the smallest mean; the optimal arm must be unique";
      throw ConfigError(msg.str());
    }
    min_gap_ = std::min(min_gap_, gaps_[i]);
  }
  if (means_.size() == 1) min_gap_ = 0.0;
}

double InstanceSpec::max_gap() const { return *std::max_element(gaps_.begin(), gaps_.end()); }

void draw_losses(const InstanceSpec& spec, const RngStream& rng, std::uint64_t round,
                 std::span<double> out) {
  const auto& means = spec.means();
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double u = rng.uniform(round, Purpose::kEnvironment, static_cast<std::uint32_t>(i));
    switch (spec.kind()) {
      case ArmKind::kBernoulli:
        out[i] = u < means[i] ? 1.0 : 0.0;
        break;
      case ArmKind::kUniform:
        out[i] = std::clamp(means[i] + spec.width() * (u - 0.5), 0.0, 1.0);
        break;
    }
  }
}

std::vector<double> draw_losses(const InstanceSpec& spec, const RngStream& rng,
                                std::uint64_t round) {
  std::vector<double> out(spec.arms());
  draw_losses(spec, rng, round, out);
  return out;
}

ReplayTable::ReplayTable(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
  if (rows_.empty() || rows_.front().empty()) throw ConfigError("replay table is empty");
  const std::size_t d = rows_.front().size();
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != d) {
      throw ConfigError("replay row " + std::to_string(r + 1) + " has " +
                        std::to_string(rows_[r].size()) + " columns, expected " +
                        std::to_string(d));
    }
    for (double v : rows_[r]) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("replay row " + std::to_string(r + 1) + " has a loss outside [0, 1]");
      }
    }
  }
}

ReplayTable ReplayTable::parse(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ConfigError("replay line " + std::to_string(lineno) + ": not a number: '" + cell +
                          "'");
      }
      if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
        throw ConfigError("replay line " + std::to_string(lineno) + ": trailing text in '" +
                          cell + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return ReplayTable(std::move(rows));
}

ReplayTable ReplayTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay file " + path.string());
  return parse(in);
}

const std::vector<double>& ReplayTable::losses(std::size_t t) const {
  if (t < 1 || t > rows_.size()) {
    throw std::out_of_range("replay round " + std::to_string(t) + " outside [1, " +
                            std::to_string(rows_.size()) + "]");
  }
  return rows_[t - 1];
}

}  // namespace tsallis_lab
