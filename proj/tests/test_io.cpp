#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hfgpi/errors.hpp"
#include "hfgpi/io.hpp"
#include "hfgpi/synthetic.hpp"

using namespace hfgpi;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

synth::SyntheticCohort micro_cohort(std::uint64_t seed, std::size_t patients = 2) {
    synth::CohortSpec s;
    s.n_patients = patients;
    s.n_genes = 5;
    s.n_proteins = 3;
    s.n_mapped = 2;
    s.patches_min = 3;
    s.patches_max = 4;
    s.d_g = 4;
    s.d = 4;
    s.censor_target = 0.0;
    s.seed = seed;
    return synth::generate(s);
}

} // namespace

TEST_CASE("doubles survive a shortest round-trip format/parse cycle") {
    for (double v : {0.0, -1.5, 1.0 / 3.0, 1e-300, 6.02e23, -0.1}) {
        CHECK(io::parse_double(io::format_double(v), "test") == v);
    }
    CHECK_THROWS_AS(io::parse_double("1.2x", "ctx"), IoError);
    CHECK_THROWS_AS(io::parse_double("", "ctx"), IoError);
}

TEST_CASE("patch files round-trip bitwise") {
    TempDir tmp("hfgpi_io_patch");
    Matrix m = Matrix::from_rows({{1.5, -2.25, 1.0 / 3.0}, {0.0, 1e-12, 42.0}});
    std::string path = (tmp.path / "p.hfgp").string();
    io::write_patch_file(path, m);
    CHECK(io::read_patch_file(path) == m);
}

TEST_CASE("truncated patch file reports expected vs actual byte counts") {
    TempDir tmp("hfgpi_io_trunc");
    Matrix m(2, 3, 1.0);
    std::string path = (tmp.path / "p.hfgp").string();
    io::write_patch_file(path, m);
    fs::resize_file(path, fs::file_size(path) - 1);
    CHECK_THROWS_WITH_AS(io::read_patch_file(path),
                         doctest::Contains("expected 48 bytes, got 47"), IoError);
}

TEST_CASE("write then load is the identity on cohorts") {
    TempDir tmp("hfgpi_io_roundtrip");
    synth::SyntheticCohort c = micro_cohort(3, 6);
    std::string manifest = io::write_cohort(c, tmp.path.string());
    io::LoadReport report;
    io::Cohort loaded = io::load_cohort(manifest, &report);
    CHECK(report.excluded.empty());
    CHECK(loaded.sample_ids == c.sample_ids);
    CHECK(loaded.genes.names == c.genes.names);
    CHECK(loaded.genes.embeddings == c.genes.embeddings);
    CHECK(loaded.proteins.embeddings == c.proteins.embeddings);
    CHECK(loaded.gene_expression == c.gene_expression);
    CHECK(loaded.protein_expression == c.protein_expression);
    for (std::size_t i = 0; i < c.patches.size(); ++i) CHECK(loaded.patches[i] == c.patches[i]);
    for (std::size_t i = 0; i < c.records.size(); ++i) {
        CHECK(loaded.records[i].time_months == c.records[i].time_months);
        CHECK(loaded.records[i].censored == c.records[i].censored);
    }
}

TEST_CASE("writing twice without overwrite is refused; byte output is deterministic") {
    TempDir a("hfgpi_io_det_a"), b("hfgpi_io_det_b");
    synth::SyntheticCohort c = micro_cohort(5);
    std::string ma = io::write_cohort(c, a.path.string());
    CHECK_THROWS_AS(io::write_cohort(c, a.path.string()), IoError);
    CHECK_NOTHROW(io::write_cohort(c, a.path.string(), true));
    std::string mb = io::write_cohort(c, b.path.string());
    for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), a.path);
        std::ifstream fa(entry.path(), std::ios::binary), fb(b.path / rel, std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
        CHECK(sa == sb);
    }
}

TEST_CASE("a 2-patient micro-cohort produces the exact artifact set") {
    TempDir tmp("hfgpi_io_count");
    io::write_cohort(micro_cohort(9), tmp.path.string());
    std::size_t tables = 0, identities = 0, patches = 0, manifests = 0;
    for (const auto& entry : fs::recursive_directory_iterator(tmp.path)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name == "manifest.txt") ++manifests;
        else if (name.ends_with(".hfgp")) ++patches;
        else if (name.find("identity") != std::string::npos) ++identities;
        else ++tables;
    }
    CHECK(manifests == 1);
    CHECK(patches == 2);
    CHECK(identities == 2);
    CHECK(tables == 3); // gene expression, protein expression, survival
}

TEST_CASE("a patient missing one modality is excluded and reported") {
    TempDir tmp("hfgpi_io_missing");
    synth::SyntheticCohort c = micro_cohort(13, 4);
    std::string manifest = io::write_cohort(c, tmp.path.string());
    fs::remove(tmp.path / "patches" / (c.sample_ids[1] + ".hfgp"));
    io::LoadReport report;
    io::Cohort loaded = io::load_cohort(manifest, &report);
    CHECK(loaded.sample_ids.size() == 3);
    REQUIRE(report.excluded.size() == 1);
    CHECK(report.excluded[0].find(c.sample_ids[1]) != std::string::npos);
    CHECK(report.excluded[0].find("patch") != std::string::npos);
}

TEST_CASE("malformed survival flags and times are rejected with the line number") {
    TempDir tmp("hfgpi_io_badflag");
    synth::SyntheticCohort c = micro_cohort(17);
    std::string manifest = io::write_cohort(c, tmp.path.string());
    {
        std::ofstream out(tmp.path / "survival.tsv", std::ios::trunc);
        out << "sample_id\ttime_months\tcensored\n" << c.sample_ids[0] << "\t5.0\t2\n";
    }
    CHECK_THROWS_WITH_AS(io::load_cohort(manifest), doctest::Contains("line 2"), IoError);
}

TEST_CASE("hidden ground truth is only written on request") {
    TempDir tmp("hfgpi_io_hidden");
    io::write_cohort(micro_cohort(21), tmp.path.string());
    CHECK(!fs::exists(tmp.path / "hidden_risk.tsv"));
    TempDir tmp2("hfgpi_io_hidden2");
    io::write_cohort(micro_cohort(21), tmp2.path.string(), false, true);
    CHECK(fs::exists(tmp2.path / "hidden_risk.tsv"));
    CHECK(fs::exists(tmp2.path / "driver_map.tsv"));
}
