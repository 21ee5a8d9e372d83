#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iyow {

enum class ExclusionReason { LowFidelity, StyleOnly };

std::string_view to_string(ExclusionReason reason);
std::optional<ExclusionReason> parse_exclusion_reason(std::string_view s);

// Natural-language interpretation of one SAE latent.
struct Theme {
  int latent_index = 0;
  std::string text;
  double fidelity = 0.0;
  bool retained = false;
  std::optional<ExclusionReason> exclusion_reason;
};

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Responses x retained themes. Entry (i, k) is 1 iff response i expresses
// theme k.
struct AnnotationMatrix {
  std::vector<std::string> row_ids;
  std::vector<Theme> themes;
  BinaryMatrix values;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
  Eigen::MatrixXd as_double() const { return values.cast<double>(); }
  // Throws if the shape or entries break the matrix invariants.
  void validate() const;
};

}  // namespace iyow
