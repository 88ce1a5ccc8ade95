#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "atomize/losses.hpp"
#include "atomize/mlp.hpp"
#include "atomize/synthetic.hpp"

namespace atomize {

struct LatentRow {
    std::size_t point_id = 0;
    double z_x = 0.0;
    double z_y = 0.0;
    int label = 0;
    int pred = 0;
};

struct LatentSummary {
    double extent_x = 0.0;  // bounding-box width
    double extent_y = 0.0;
    double min_cross_class = 0.0;   // smallest 2-norm between differently labelled points
    double mean_cross_class = 0.0;
    std::size_t cross_pairs = 0;
};

struct LatentDump {
    Method method = Method::ce;
    std::uint64_t seed = 0;
    std::vector<LatentRow> rows;  // one per test point
    LatentSummary summary;
};

LatentDump export_latent(const MlpParams& params, const SyntheticDataset& dataset, Method method,
                         std::uint64_t seed, const ModelOptions& options = {});
LatentSummary summarize_latent(const std::vector<LatentRow>& rows);

struct ChargeRow {
    std::size_t point_id = 0;
    std::size_t feature_idx = 0;
    double q = 0.0;
    double m = 0.0;
    int source_component = 0;
};

struct AtomSummaryRow {
    std::size_t point_id = 0;
    double sum_q = 0.0;
    double sum_q2 = 0.0;
    double radius = 0.0;
    double mu_x = 0.0;
    double mu_y = 0.0;
};

struct ChargeReport {
    std::vector<ChargeRow> charges;      // five per test point
    std::vector<AtomSummaryRow> atoms;   // one per test point

    // Mean over atoms of |sum q|.
    double mean_abs_total_charge() const;
};

ChargeReport export_charges(const MlpParams& params, const SyntheticDataset& dataset,
                            const ModelOptions& options = {});

// point_id,z_x,z_y,label,pred,method,seed
void write_latent_csv(const LatentDump& dump, std::ostream& out);
// point_id,feature_idx,q,m,source_component
void write_charges_csv(const ChargeReport& report, std::ostream& out);
// point_id,sum_q,sum_q2,radius,mu_x,mu_y
void write_atom_summary_csv(const ChargeReport& report, std::ostream& out);

}  // namespace atomize
