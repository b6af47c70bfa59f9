#pragma once

#include <map>
#include <string>
#include <vector>

#include "hfgpi/matrix.hpp"
#include "hfgpi/survival.hpp"
#include "hfgpi/synthetic.hpp"
#include "hfgpi/tokenizer.hpp"

namespace hfgpi::io {

// Observable cohort as loaded from disk: identity tables, expression
// matrices (rows aligned to sample_ids), per-patient patch features, and
// survival records. Feature order is the file order, never reordered.
struct Cohort {
    tok::IdentityTable genes;
    tok::IdentityTable proteins;
    std::vector<std::string> sample_ids;
    Matrix gene_expression;    // n x N_g raw counts
    Matrix protein_expression; // n x N_p abundances
    std::vector<Matrix> patches;
    std::vector<surv::SurvivalRecord> records; // time_bin unset (0)
};

// In-memory view of a generated cohort's observables.
Cohort to_cohort(const synth::SyntheticCohort& s);

struct LoadReport {
    std::vector<std::string> excluded; // one message per rejected patient
};

// Shortest round-trip decimal formatting / strict parsing.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);

// Binary per-patient patch container: magic "HFGP", u32 version, u64 M,
// u64 d, then M*d little-endian 64-bit reals row-major.
void write_patch_file(const std::string& path, const Matrix& m);
Matrix read_patch_file(const std::string& path);

// Writes tables, patch files, and a key=value manifest into `dir`; returns
// the manifest path. Refuses to clobber an existing manifest unless
// `overwrite`. Hidden ground truth is only written when `include_hidden`.
std::string write_cohort(const synth::SyntheticCohort& cohort, const std::string& dir,
                         bool overwrite = false, bool include_hidden = false);

// Loads a cohort from its manifest, retaining only patients present in every
// modality; exclusions are reported by name.
Cohort load_cohort(const std::string& manifest_path, LoadReport* report = nullptr);

std::map<std::string, std::string> read_manifest(const std::string& path);

} // namespace hfgpi::io
