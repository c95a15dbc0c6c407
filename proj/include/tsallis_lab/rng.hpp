#pragma once

// Counter-based random numbers for reproducible replications.
//
// Every draw is a pure function of (master seed, replication, round, purpose,
// lane), so trajectories do not depend on thread scheduling and the
// environment never shares a stream position with the policy.

#include <array>
#include <cstdint>

namespace tsallis_lab {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

enum class Purpose : std::uint32_t {
  kEnvironment = 1,
  kArmSampling = 2,
};

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t replication)
      : master_seed_(master_seed), replication_(replication) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t replication() const { return replication_; }

  /// Uniform on [0, 1) with 53 random bits. Each (round, purpose, lane)
  /// addresses its own value; lanes index arms within a round.
  double uniform(std::uint64_t round, Purpose purpose, std::uint32_t lane = 0) const;

 private:
  std::uint64_t master_seed_;
  std::uint64_t replication_;
};

}  // namespace tsallis_lab
