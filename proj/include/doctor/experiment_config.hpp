#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace doctor {

enum class MethodId { d_star, d_alpha, d_beta, sr, odin, mhlnb };
enum class RocModeChoice { exact, grid, both };

std::string method_name(MethodId m);
MethodId method_from_name(const std::string& name);
std::string roc_mode_name(RocModeChoice m);
RocModeChoice roc_mode_from_name(const std::string& name);

struct ExperimentConfig {
  std::vector<double> mu{1.0, 1.0};
  double sigma = 2.0;
  std::size_t n_per_class = 5000;
  std::size_t n_train = 6700;
  int splits = 8;
  double lr = 0.1;
  int epochs = 5;
  std::uint64_t base_seed = 39;
  // Weight-init scale of the stochastic trainer variant; 0 selects
  // deterministic zero initialization.
  double init_scale = 0.25;
  std::vector<MethodId> methods{MethodId::d_star, MethodId::d_alpha, MethodId::d_beta,
                                MethodId::sr, MethodId::odin};
  double temperature = 1.0;
  double epsilon = 0.0;
  RocModeChoice roc_mode = RocModeChoice::both;
  // Draw a fresh pool per split instead of one fixed pool per sigma.
  bool resample_pool_per_split = false;
};

void validate(const ExperimentConfig& cfg);

}  // namespace doctor
