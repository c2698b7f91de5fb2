#include "smpkit/report.hpp"

#include <algorithm>

namespace smpkit {

json to_json(const CostEstimate& estimate) {
    return json{{"mean", estimate.mean},
                {"std_error", estimate.std_error},
                {"paths", estimate.paths}};
}

json to_json(const McEstimate& estimate) {
    return json{{"value", estimate.value}, {"std_error", estimate.std_error}};
}

json to_json(const StationarityReport& report) {
    json labels = json::object();
    for (int r = 0; r < report.label_counts.rows(); ++r) {
        json row = json::object();
        for (int c = 0; c < 5; ++c)
            row[active_case_name(static_cast<ActiveCase>(c))] = report.label_counts(r, c);
        labels["regime_" + std::to_string(r)] = std::move(row);
    }
    json per_step = json::array();
    for (const auto& step : report.per_step)
        per_step.push_back(json{{"t", step.t},
                                {"pass_count", step.pass_count},
                                {"max_violation", step.max_violation}});
    return json{{"tol", report.tol},
                {"steps", report.steps},
                {"paths", report.paths},
                {"pass_fraction", report.pass_fraction},
                {"all_pass", report.all_pass},
                {"max_violation", report.max_violation},
                {"worst_step", report.worst_step},
                {"worst_path", static_cast<std::uint64_t>(report.worst_path)},
                {"labels", std::move(labels)},
                {"per_step", std::move(per_step)}};
}

json to_json(const SufficiencyReport& report) {
    json out{{"terminal_convex", report.terminal_convex},
             {"hamiltonian_concave", report.hamiltonian_concave},
             {"verdict", report.verdict},
             {"worst_convexity_margin", report.worst_convexity_margin},
             {"worst_concavity_margin", report.worst_concavity_margin},
             {"probes", report.probes}};
    if (report.concavity_witness) {
        const auto& w = *report.concavity_witness;
        out["concavity_witness"] = json{{"t", w.t},
                                        {"regime", w.regime},
                                        {"x1", w.x1(0)},
                                        {"u1", w.u1(0)},
                                        {"x2", w.x2(0)},
                                        {"u2", w.u2(0)},
                                        {"margin", w.margin}};
    }
    return out;
}

json to_json(const CostComparison& comparison) {
    json alternatives = json::array();
    for (const auto& alt : comparison.alternatives)
        alternatives.push_back(json{{"name", alt.name},
                                    {"mean", alt.mean},
                                    {"std_error", alt.std_error},
                                    {"gap_mean", alt.gap_mean},
                                    {"gap_std_error", alt.gap_std_error},
                                    {"beats_candidate", alt.beats_candidate}});
    return json{{"candidate",
                 json{{"name", comparison.candidate.name},
                      {"mean", comparison.candidate.mean},
                      {"std_error", comparison.candidate.std_error}}},
                {"alternatives", std::move(alternatives)},
                {"candidate_best", comparison.candidate_best}};
}

json to_json(const ValidationReport& report) {
    json issues = json::array();
    for (const auto& issue : report.issues)
        issues.push_back(json{{"check", issue.check}, {"detail", issue.detail}});
    return json{{"ok", report.ok()}, {"probes", report.probes}, {"issues", std::move(issues)}};
}

json to_json(const DualityGap& gap) {
    return json{{"remainder", gap.remainder},
                {"std_error", gap.std_error},
                {"cost_gap", gap.cost_gap},
                {"hamiltonian_gap", gap.hamiltonian_gap}};
}

json ansatz_curve_json(const AnsatzCurve& curve, int max_nodes) {
    const int nodes = static_cast<int>(curve.times.size());
    const int stride = std::max(1, (nodes + max_nodes - 1) / max_nodes);
    json times = json::array();
    json values = json::array();
    for (int idx = 0; idx < nodes; idx += stride) {
        times.push_back(curve.times(idx));
        json row = json::array();
        for (int r = 0; r < curve.values.cols(); ++r) row.push_back(curve.values(idx, r));
        values.push_back(std::move(row));
    }
    if ((nodes - 1) % stride != 0) {
        times.push_back(curve.times(nodes - 1));
        json row = json::array();
        for (int r = 0; r < curve.values.cols(); ++r) row.push_back(curve.values(nodes - 1, r));
        values.push_back(std::move(row));
    }
    return json{{"times", std::move(times)}, {"values", std::move(values)}};
}

void write_paths_csv(std::ostream& out, const PathBundle& bundle, int max_paths) {
    const int n = static_cast<int>(bundle.paths.empty() ? 0 : bundle.paths[0].states.cols());
    const int k = static_cast<int>(bundle.paths.empty() ? 0 : bundle.paths[0].controls.cols());
    out << "path_id,step,t,regime";
    for (int a = 0; a < n; ++a) out << ",x" << a;
    for (int c = 0; c < k; ++c) out << ",u" << c;
    out << "\n";
    const int limit = std::min<int>(max_paths, bundle.path_count());
    for (int p = 0; p < limit; ++p) {
        for (int j = 0; j <= bundle.steps(); ++j) {
            const double t = bundle.grid(j);
            out << p << ',' << j << ',' << t << ',' << bundle.paths[p].regime.state_at(t);
            for (int a = 0; a < n; ++a) out << ',' << bundle.paths[p].states(j, a);
            for (int c = 0; c < k; ++c) {
                if (j < bundle.steps())
                    out << ',' << bundle.paths[p].controls(j, c);
                else
                    out << ',';
            }
            out << "\n";
        }
    }
}

void write_chain_csv(std::ostream& out, const PathBundle& bundle, int max_paths) {
    out << "path_id,jump_time,new_state\n";
    const int limit = std::min<int>(max_paths, bundle.path_count());
    for (int p = 0; p < limit; ++p)
        for (const auto& jump : bundle.paths[p].regime.jumps())
            out << p << ',' << jump.time << ',' << jump.state << "\n";
}

void write_adjoint_csv(std::ostream& out, const PathBundle& bundle, const AdjointValues& adjoint,
                       int state_dim, int brownian_dim, int max_paths) {
    out << "path_id,step,t";
    for (int a = 0; a < state_dim; ++a) out << ",p" << a;
    for (int a = 0; a < state_dim; ++a)
        for (int c = 0; c < brownian_dim; ++c) out << ",q" << a << "_" << c;
    out << "\n";
    const int limit = std::min<int>(max_paths, bundle.path_count());
    for (int p = 0; p < limit; ++p) {
        for (int j = 0; j < bundle.steps(); ++j) {
            out << p << ',' << j << ',' << bundle.grid(j);
            const VectorXd pv = adjoint.p(j, static_cast<std::size_t>(p));
            const MatrixXd qv = adjoint.q(j, static_cast<std::size_t>(p));
            for (int a = 0; a < state_dim; ++a) out << ',' << pv(a);
            for (int a = 0; a < state_dim; ++a)
                for (int c = 0; c < brownian_dim; ++c) out << ',' << qv(a, c);
            out << "\n";
        }
    }
}

void write_ansatz_csv(std::ostream& out, const AnsatzCurve& phi, const AnsatzCurve* psi) {
    out << "t,regime,phi";
    if (psi) out << ",psi";
    out << "\n";
    for (int idx = 0; idx < phi.times.size(); ++idx) {
        for (int r = 0; r < phi.values.cols(); ++r) {
            out << phi.times(idx) << ',' << r << ',' << phi.values(idx, r);
            if (psi) out << ',' << psi->values(idx, r);
            out << "\n";
        }
    }
}

void write_costs_csv(std::ostream& out, const CostComparison& comparison) {
    out << "name,mean,std_error,gap_mean,gap_std_error,beats_candidate\n";
    out << comparison.candidate.name << ',' << comparison.candidate.mean << ','
        << comparison.candidate.std_error << ",0,0,false\n";
    for (const auto& alt : comparison.alternatives)
        out << alt.name << ',' << alt.mean << ',' << alt.std_error << ',' << alt.gap_mean << ','
            << alt.gap_std_error << ',' << (alt.beats_candidate ? "true" : "false") << "\n";
}

} // namespace smpkit
