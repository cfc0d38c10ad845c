#pragma once

// File formats. Every reader reports the offending line number.
//
//   curves       subject_id,dim_id,t,value        (shared time grid)
//   responses    subject_id,response
//   conditions   dim_id,coord_1,...,coord_s
//   groups       dim_id,group_id                  (group ids 1..K)
//   coefficients dim_id,t,beta_value              (exported curves)
//   comparison   method,MSE_mean,MSE_sd,Sens,Spec

#include <filesystem>
#include <string>
#include <vector>

#include "fusionreg/basis.hpp"
#include "fusionreg/conditions.hpp"
#include "fusionreg/estimators.hpp"
#include "fusionreg/simulation.hpp"

namespace fusionreg::io {

inline constexpr int kFitFormatVersion = 1;

/// Malformed or inconsistent input file.
class FormatError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// Curves of n subjects on p dimensions, sampled on one shared grid.
struct CurveTable {
    std::vector<std::string> subject_ids;
    std::vector<std::string> dim_ids;
    std::vector<double> grid;
    std::vector<Matrix> values;  // per subject, p x G
};

CurveTable read_curves_csv(const std::filesystem::path& path);
void write_curves_csv(const std::filesystem::path& path, const CurveTable& table);

/// Evaluates coefficient records on a grid.
CurveTable curves_from_coefficients(const std::vector<Matrix>& coeffs, const BasisSystem& basis,
                                    const std::vector<double>& grid,
                                    const std::vector<std::string>& subject_ids,
                                    const std::vector<std::string>& dim_ids);

/// Responses in `subject_ids` order.
Vector read_responses_csv(const std::filesystem::path& path, const std::vector<std::string>& subject_ids);
void write_responses_csv(const std::filesystem::path& path, const std::vector<std::string>& subject_ids,
                         const Vector& responses);

/// Dimension ids become the labels.
ConditionSet read_conditions_csv(const std::filesystem::path& path, Metric metric);
void write_conditions_csv(const std::filesystem::path& path, const ConditionSet& conditions);

/// Rows are matched to `dim_ids`; group ids must be the integers 1..K.
ConditionGrouping read_groups_csv(const std::filesystem::path& path, const std::vector<std::string>& dim_ids);
void write_groups_csv(const std::filesystem::path& path, const ConditionGrouping& grouping,
                      const std::vector<std::string>& dim_ids);

/// Reorders curve dimensions to follow `dim_ids`; throws if the sets differ.
CurveTable align_dimensions(const CurveTable& table, const std::vector<std::string>& dim_ids);

/// Samples every beta_j at `grid_size` equidistant points (the midpoint when
/// grid_size = 1).
void write_beta_curves_csv(const std::filesystem::path& path, const CoefficientFunction& beta,
                           const std::vector<std::string>& dim_ids, int grid_size);

/// Plain coefficient matrix: dim_id,b_1,...,b_M.
void write_coefficient_matrix_csv(const std::filesystem::path& path, const Matrix& b,
                                  const std::vector<std::string>& dim_ids);

struct StoredFit {
    FitResult fit;
    std::vector<std::string> dim_ids;
};

std::string fit_to_json(const FitResult& fit, const std::vector<std::string>& dim_ids);
StoredFit fit_from_json(const std::string& text);
void write_fit_json(const std::filesystem::path& path, const FitResult& fit,
                    const std::vector<std::string>& dim_ids);
StoredFit read_fit_json(const std::filesystem::path& path);

void write_comparison_csv(const std::filesystem::path& path, const std::vector<MethodSummary>& rows);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

}  // namespace fusionreg::io
