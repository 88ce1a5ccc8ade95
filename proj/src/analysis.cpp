#include "atomize/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "atomize/io.hpp"

namespace atomize {

LatentSummary summarize_latent(const std::vector<LatentRow>& rows) {
    LatentSummary s;
    if (rows.empty()) return s;
    double min_x = rows[0].z_x, max_x = rows[0].z_x, min_y = rows[0].z_y, max_y = rows[0].z_y;
    for (const LatentRow& r : rows) {
        min_x = std::min(min_x, r.z_x);
        max_x = std::max(max_x, r.z_x);
        min_y = std::min(min_y, r.z_y);
        max_y = std::max(max_y, r.z_y);
    }
    s.extent_x = max_x - min_x;
    s.extent_y = max_y - min_y;

    double best = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            if (rows[i].label == rows[j].label) continue;
            const double d = std::hypot(rows[i].z_x - rows[j].z_x, rows[i].z_y - rows[j].z_y);
            best = std::min(best, d);
            total += d;
            ++s.cross_pairs;
        }
    }
    if (s.cross_pairs > 0) {
        s.min_cross_class = best;
        s.mean_cross_class = total / static_cast<double>(s.cross_pairs);
    }
    return s;
}

LatentDump export_latent(const MlpParams& params, const SyntheticDataset& dataset, Method method,
                         std::uint64_t seed, const ModelOptions& options) {
    LatentDump dump;
    dump.method = method;
    dump.seed = seed;
    for (std::size_t i : dataset.indices(Split::test)) {
        const PointOutputs out = predict(params, dataset.points[i], options);
        dump.rows.push_back(LatentRow{i, out.z[0], out.z[1], dataset.labels[i], out.prediction});
    }
    dump.summary = summarize_latent(dump.rows);
    return dump;
}

double ChargeReport::mean_abs_total_charge() const {
    if (atoms.empty()) return 0.0;
    double total = 0.0;
    for (const AtomSummaryRow& a : atoms) total += std::abs(a.sum_q);
    return total / static_cast<double>(atoms.size());
}

ChargeReport export_charges(const MlpParams& params, const SyntheticDataset& dataset,
                            const ModelOptions& options) {
    ChargeReport report;
    for (std::size_t i : dataset.indices(Split::test)) {
        Graph g;
        const ParamVars pv = bind(g, params, false);
        const ForwardTrace trace = forward(pv, g.constant(dataset.points[i]), options);
        const Atom atom = atom_view(trace, options);
        AtomSummaryRow summary{i, 0.0, 0.0, atom.radius.item(), atom.nucleus.value()[0],
                               atom.nucleus.value()[1]};
        for (std::size_t f = 0; f < atom.count; ++f) {
            const double q = atom.charges.value()[f];
            report.charges.push_back(ChargeRow{i, f, q, atom.masses.value()[f], dataset.sources[i][f]});
            summary.sum_q += q;
            summary.sum_q2 += q * q;
        }
        report.atoms.push_back(summary);
    }
    return report;
}

void write_latent_csv(const LatentDump& dump, std::ostream& out) {
    out << "point_id,z_x,z_y,label,pred,method,seed\n";
    for (const LatentRow& r : dump.rows) {
        out << r.point_id << ',' << format_double(r.z_x) << ',' << format_double(r.z_y) << ',' << r.label
            << ',' << r.pred << ',' << method_name(dump.method) << ',' << dump.seed << '\n';
    }
}

void write_charges_csv(const ChargeReport& report, std::ostream& out) {
    out << "point_id,feature_idx,q,m,source_component\n";
    for (const ChargeRow& r : report.charges) {
        out << r.point_id << ',' << r.feature_idx << ',' << format_double(r.q) << ','
            << format_double(r.m) << ',' << r.source_component << '\n';
    }
}

void write_atom_summary_csv(const ChargeReport& report, std::ostream& out) {
    out << "point_id,sum_q,sum_q2,radius,mu_x,mu_y\n";
    for (const AtomSummaryRow& r : report.atoms) {
        out << r.point_id << ',' << format_double(r.sum_q) << ',' << format_double(r.sum_q2) << ','
            << format_double(r.radius) << ',' << format_double(r.mu_x) << ',' << format_double(r.mu_y)
            << '\n';
    }
}

}  // namespace atomize
