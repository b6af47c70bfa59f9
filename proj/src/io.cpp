#include "hfgpi/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hfgpi/errors.hpp"

namespace fs = std::filesystem;

namespace hfgpi::io {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << body;
    if (!out) throw IoError("write failed for " + path);
}

// name + embedding row per line; header gives column labels.
std::string identity_to_text(const tok::IdentityTable& t) {
    std::ostringstream out;
    out << "name";
    for (std::size_t j = 0; j < t.dim(); ++j) out << "\te" << j;
    out << '\n';
    for (std::size_t i = 0; i < t.count(); ++i) {
        out << t.names[i];
        for (std::size_t j = 0; j < t.dim(); ++j) out << '\t' << format_double(t.embeddings(i, j));
        out << '\n';
    }
    return out.str();
}

tok::IdentityTable identity_from_file(const std::string& path, const std::string& what) {
    auto lines = read_lines(path);
    if (lines.empty()) throw IoError(path + ": empty identity table");
    auto header = split_tabs(lines[0]);
    if (header.empty() || header[0] != "name")
        throw IoError(path + " line 1: identity header must start with 'name'");
    std::size_t dim = header.size() - 1;
    tok::IdentityTable t;
    t.embeddings = Matrix(lines.size() - 1, dim);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto cells = split_tabs(lines[r]);
        if (cells.size() != header.size())
            throw IoError(path + " line " + std::to_string(r + 1) + ": expected " +
                          std::to_string(header.size()) + " columns, got " +
                          std::to_string(cells.size()));
        t.names.push_back(cells[0]);
        for (std::size_t j = 0; j < dim; ++j)
            t.embeddings(r - 1, j) =
                parse_double(cells[j + 1], path + " line " + std::to_string(r + 1));
    }
    t.validate(what);
    return t;
}

std::string expression_to_text(const std::vector<std::string>& samples,
                               const std::vector<std::string>& features, const Matrix& values) {
    std::ostringstream out;
    out << "sample_id";
    for (const auto& f : features) out << '\t' << f;
    out << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out << samples[i];
        for (std::size_t j = 0; j < features.size(); ++j) out << '\t' << format_double(values(i, j));
        out << '\n';
    }
    return out.str();
}

struct ExpressionTable {
    std::vector<std::string> samples;
    std::vector<std::string> features;
    Matrix values;
};

ExpressionTable expression_from_file(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw IoError(path + ": empty expression table");
    auto header = split_tabs(lines[0]);
    if (header.empty() || header[0] != "sample_id")
        throw IoError(path + " line 1: expression header must start with 'sample_id'");
    ExpressionTable t;
    t.features.assign(header.begin() + 1, header.end());
    std::set<std::string> seen_features(t.features.begin(), t.features.end());
    if (seen_features.size() != t.features.size())
        throw IoError(path + ": duplicate feature names");
    t.values = Matrix(lines.size() - 1, t.features.size());
    std::set<std::string> seen_samples;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto cells = split_tabs(lines[r]);
        if (cells.size() != header.size())
            throw IoError(path + " line " + std::to_string(r + 1) + ": expected " +
                          std::to_string(header.size()) + " columns, got " +
                          std::to_string(cells.size()));
        if (!seen_samples.insert(cells[0]).second)
            throw IoError(path + " line " + std::to_string(r + 1) + ": duplicate sample id " +
                          cells[0]);
        t.samples.push_back(cells[0]);
        for (std::size_t j = 0; j < t.features.size(); ++j)
            t.values(r - 1, j) =
                parse_double(cells[j + 1], path + " line " + std::to_string(r + 1));
    }
    return t;
}

} // namespace

Cohort to_cohort(const synth::SyntheticCohort& s) {
    Cohort c;
    c.genes = s.genes;
    c.proteins = s.proteins;
    c.sample_ids = s.sample_ids;
    c.gene_expression = s.gene_expression;
    c.protein_expression = s.protein_expression;
    c.patches = s.patches;
    c.records = s.records;
    return c;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw IoError(context + ": cannot parse number '" + text + "'");
    return v;
}

void write_patch_file(const std::string& path, const Matrix& m) {
    if (m.rows() < 1) throw InputError("patch file needs M >= 1 rows");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write("HFGP", 4);
    std::uint32_t version = 1;
    std::uint64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(8 * m.size()));
    if (!out) throw IoError("write failed for " + path);
}

Matrix read_patch_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "HFGP", 4) != 0)
        throw IoError(path + ": bad magic at byte 0, expected 'HFGP'");
    std::uint32_t version = 0;
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (!in) throw IoError(path + ": truncated header, expected 24 bytes");
    if (version != 1) throw IoError(path + ": unsupported format version " + std::to_string(version));
    if (rows < 1) throw IoError(path + ": M must be >= 1");
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(8 * m.size()));
    std::uint64_t got = static_cast<std::uint64_t>(in.gcount());
    if (got != 8 * m.size())
        throw IoError(path + ": truncated payload, expected " + std::to_string(8 * m.size()) +
                      " bytes, got " + std::to_string(got));
    require_finite(m, path);
    return m;
}

std::string write_cohort(const synth::SyntheticCohort& cohort, const std::string& dir,
                         bool overwrite, bool include_hidden) {
    fs::create_directories(dir);
    fs::path root(dir);
    fs::path manifest = root / "manifest.txt";
    if (fs::exists(manifest) && !overwrite)
        throw IoError(manifest.string() + " exists; pass overwrite to replace it");

    write_text((root / "gene_identity.tsv").string(), identity_to_text(cohort.genes));
    write_text((root / "protein_identity.tsv").string(), identity_to_text(cohort.proteins));
    write_text((root / "gene_expression.tsv").string(),
               expression_to_text(cohort.sample_ids, cohort.genes.names, cohort.gene_expression));
    write_text((root / "protein_expression.tsv").string(),
               expression_to_text(cohort.sample_ids, cohort.proteins.names,
                                  cohort.protein_expression));
    {
        std::ostringstream out;
        out << "sample_id\ttime_months\tcensored\n";
        for (std::size_t i = 0; i < cohort.sample_ids.size(); ++i)
            out << cohort.sample_ids[i] << '\t' << format_double(cohort.records[i].time_months)
                << '\t' << (cohort.records[i].censored ? 1 : 0) << '\n';
        write_text((root / "survival.tsv").string(), out.str());
    }
    fs::create_directories(root / "patches");
    for (std::size_t i = 0; i < cohort.sample_ids.size(); ++i)
        write_patch_file((root / "patches" / (cohort.sample_ids[i] + ".hfgp")).string(),
                         cohort.patches[i]);
    if (include_hidden) {
        std::ostringstream out;
        out << "sample_id\thidden_risk\n";
        for (std::size_t i = 0; i < cohort.sample_ids.size(); ++i)
            out << cohort.sample_ids[i] << '\t' << format_double(cohort.hidden_risk[i]) << '\n';
        write_text((root / "hidden_risk.tsv").string(), out.str());
        std::ostringstream dm;
        dm << "protein\tdriver_genes\n";
        for (std::size_t p = 0; p < cohort.driver_map.size(); ++p) {
            dm << cohort.proteins.names[p] << '\t';
            for (std::size_t j = 0; j < cohort.driver_map[p].size(); ++j)
                dm << (j ? "," : "") << cohort.genes.names[cohort.driver_map[p][j]];
            dm << '\n';
        }
        write_text((root / "driver_map.tsv").string(), dm.str());
    }
    std::ostringstream mf;
    mf << "format_version=1\n"
       << "gene_identity=gene_identity.tsv\n"
       << "protein_identity=protein_identity.tsv\n"
       << "gene_expression=gene_expression.tsv\n"
       << "protein_expression=protein_expression.tsv\n"
       << "survival=survival.tsv\n"
       << "patch_dir=patches\n";
    write_text(manifest.string(), mf.str());
    return manifest.string();
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::map<std::string, std::string> kv;
    auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::size_t eq = lines[i].find('=');
        if (eq == std::string::npos)
            throw IoError(path + " line " + std::to_string(i + 1) + ": expected key=value");
        kv[lines[i].substr(0, eq)] = lines[i].substr(eq + 1);
    }
    for (const char* key : {"gene_identity", "protein_identity", "gene_expression",
                            "protein_expression", "survival", "patch_dir"})
        if (!kv.count(key)) throw IoError(path + ": manifest is missing key '" + std::string(key) + "'");
    return kv;
}

Cohort load_cohort(const std::string& manifest_path, LoadReport* report) {
    auto kv = read_manifest(manifest_path);
    fs::path root = fs::path(manifest_path).parent_path();
    auto at = [&](const std::string& key) { return (root / kv.at(key)).string(); };

    Cohort c;
    c.genes = identity_from_file(at("gene_identity"), "gene identity table");
    c.proteins = identity_from_file(at("protein_identity"), "protein identity table");
    ExpressionTable ge = expression_from_file(at("gene_expression"));
    ExpressionTable pe = expression_from_file(at("protein_expression"));
    if (ge.features != c.genes.names)
        throw InputError(at("gene_expression") + ": feature names do not match gene identity table");
    if (pe.features != c.proteins.names)
        throw InputError(at("protein_expression") +
                         ": feature names do not match protein identity table");

    // survival table
    std::map<std::string, surv::SurvivalRecord> survival;
    {
        std::string path = at("survival");
        auto lines = read_lines(path);
        if (lines.empty() || split_tabs(lines[0]) !=
                                 std::vector<std::string>{"sample_id", "time_months", "censored"})
            throw IoError(path + " line 1: expected header sample_id<TAB>time_months<TAB>censored");
        for (std::size_t r = 1; r < lines.size(); ++r) {
            auto cells = split_tabs(lines[r]);
            std::string where = path + " line " + std::to_string(r + 1);
            if (cells.size() != 3) throw IoError(where + ": expected 3 columns");
            surv::SurvivalRecord rec;
            rec.time_months = parse_double(cells[1], where);
            if (rec.time_months <= 0.0) throw IoError(where + ": time_months must be > 0");
            if (cells[2] != "0" && cells[2] != "1")
                throw IoError(where + ": censored flag must be 0 or 1");
            rec.censored = cells[2] == "1";
            if (!survival.emplace(cells[0], rec).second)
                throw IoError(where + ": duplicate sample id " + cells[0]);
        }
    }
    std::map<std::string, std::size_t> protein_row;
    for (std::size_t i = 0; i < pe.samples.size(); ++i) protein_row[pe.samples[i]] = i;

    // reconcile: keep patients present in every modality, gene-table order
    for (std::size_t i = 0; i < ge.samples.size(); ++i) {
        const std::string& id = ge.samples[i];
        std::string patch_path = (root / kv.at("patch_dir") / (id + ".hfgp")).string();
        std::string why;
        if (!protein_row.count(id)) why = "missing protein expression";
        else if (!survival.count(id)) why = "missing survival record";
        else if (!fs::exists(patch_path)) why = "missing patch file";
        if (!why.empty()) {
            if (report) report->excluded.push_back(id + ": " + why);
            continue;
        }
        c.sample_ids.push_back(id);
        c.records.push_back(survival.at(id));
        c.patches.push_back(read_patch_file(patch_path));
    }
    if (c.sample_ids.empty()) throw InputError(manifest_path + ": no patient present in all modalities");
    if (report)
        for (const auto& [id, rec] : survival)
            if (std::find(c.sample_ids.begin(), c.sample_ids.end(), id) == c.sample_ids.end() &&
                std::find(ge.samples.begin(), ge.samples.end(), id) == ge.samples.end())
                report->excluded.push_back(id + ": missing gene expression");

    c.gene_expression = Matrix(c.sample_ids.size(), ge.features.size());
    c.protein_expression = Matrix(c.sample_ids.size(), pe.features.size());
    std::map<std::string, std::size_t> gene_row;
    for (std::size_t i = 0; i < ge.samples.size(); ++i) gene_row[ge.samples[i]] = i;
    for (std::size_t i = 0; i < c.sample_ids.size(); ++i) {
        std::size_t gr = gene_row.at(c.sample_ids[i]);
        std::size_t pr = protein_row.at(c.sample_ids[i]);
        for (std::size_t j = 0; j < ge.features.size(); ++j)
            c.gene_expression(i, j) = ge.values(gr, j);
        for (std::size_t j = 0; j < pe.features.size(); ++j)
            c.protein_expression(i, j) = pe.values(pr, j);
    }
    return c;
}

} // namespace hfgpi::io
