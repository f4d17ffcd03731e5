#pragma once

#include "metabal/study.hpp"
#include "oracles.hpp"

#include <string>
#include <vector>

namespace testing {

inline metabal::StudySet to_set(const oracle::Data& d) {
  std::vector<metabal::Study> studies;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    studies.push_back({"s" + std::to_string(i + 1), d.y[i], d.se[i], std::nullopt, true});
  }
  return metabal::StudySet(std::move(studies));
}

inline metabal::StudySet make_set(std::initializer_list<std::pair<double, double>> rows) {
  std::vector<metabal::Study> studies;
  int i = 0;
  for (const auto& [y, se] : rows) studies.push_back({"s" + std::to_string(++i), y, se, std::nullopt, true});
  return metabal::StudySet(std::move(studies));
}

inline std::vector<double> to_vector(const Eigen::ArrayXd& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

}  // namespace testing
