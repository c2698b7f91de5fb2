#pragma once

#include <json.hpp>
#include <ostream>

#include "smpkit/adjoint.hpp"
#include "smpkit/smp.hpp"

namespace smpkit {

using json = nlohmann::json;

json to_json(const CostEstimate& estimate);
json to_json(const McEstimate& estimate);
json to_json(const StationarityReport& report);
json to_json(const SufficiencyReport& report);
json to_json(const CostComparison& comparison);
json to_json(const ValidationReport& report);
json to_json(const DualityGap& gap);

/// Curve samples decimated to at most `max_nodes` rows.
json ansatz_curve_json(const AnsatzCurve& curve, int max_nodes = 101);

// CSV writers. Paths dumps are capped so bulk runs stay manageable.
void write_paths_csv(std::ostream& out, const PathBundle& bundle, int max_paths = 100);
void write_chain_csv(std::ostream& out, const PathBundle& bundle, int max_paths = 1000);
void write_adjoint_csv(std::ostream& out, const PathBundle& bundle, const AdjointValues& adjoint,
                       int state_dim, int brownian_dim, int max_paths = 100);
void write_ansatz_csv(std::ostream& out, const AnsatzCurve& phi, const AnsatzCurve* psi = nullptr);
void write_costs_csv(std::ostream& out, const CostComparison& comparison);

} // namespace smpkit
