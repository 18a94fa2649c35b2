#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace beamkit {

/// Raised when QoS floors cannot be met within the power budget.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, int constraint_index,
                  std::string constraint_label,
                  std::vector<double> violation = {})
      : std::runtime_error(what),
        constraint_index_(constraint_index),
        constraint_label_(std::move(constraint_label)),
        violation_(std::move(violation)) {}

  int constraint_index() const { return constraint_index_; }
  const std::string& constraint_label() const { return constraint_label_; }
  const std::vector<double>& violation() const { return violation_; }

 private:
  int constraint_index_;
  std::string constraint_label_;
  std::vector<double> violation_;
};

/// Configuration document could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string field)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace beamkit
