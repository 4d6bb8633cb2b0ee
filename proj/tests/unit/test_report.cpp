#include <fstream>
#include <sstream>

#include "advs/report.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace advs;
using namespace advs::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("counts 87/9/85/11") {
    const EvalReport r = make_report(87, 9, 85, 11);
    CHECK(r.defense_accuracy == doctest::Approx(85.0 / 96.0));
    const std::string text = format_report_text(r);
    CHECK(text.find("Defense Model Accuracy : 88.54%") != std::string::npos);
    CHECK(text.find("Attack Model Accuracy : 90.63%") != std::string::npos);
    CHECK(text.find("Attack Successfully Performed in : 87 images") != std::string::npos);
    CHECK(text.find("Attack failed in : 9 images") != std::string::npos);
    CHECK(text.find("Defense successful in : 85 images") != std::string::npos);
    CHECK(text.find("Defense failed in : 11 images") != std::string::npos);
    CHECK(format_report_text(r, true).find("Defense succesfull in : 85 images") != std::string::npos);
}

TEST_CASE("degenerate attack formats as zero") {
    const std::string text = format_report_text(make_report(0, 96, 96, 0));
    CHECK(text.find("Attack Model Accuracy : 0.00%") != std::string::npos);
    CHECK(text.find("Defense Model Accuracy : 100.00%") != std::string::npos);
}

TEST_CASE("invariants are enforced") {
    CHECK_THROWS(make_report(1, 2, 1, 1));
    EvalReport r = make_report(3, 1, 2, 2);
    r.defense_accuracy = 0.6;
    CHECK_THROWS(r.validate());
}

TEST_CASE("json round trip is lossless") {
    EvalReport r = make_report(87, 9, 85, 11);
    r.epsilon = 0.2;
    r.n_channels = 4;
    r.seed = 18446744073709551557ull;
    r.mse_adv = 0.1 + 0.2;
    r.mse_denoised = 1.0 / 3.0;
    const EvalReport back = report_from_json(report_to_json(r));
    CHECK(back == r);
    CHECK_THROWS_AS(report_from_json("{"), FormatError);
    CHECK_THROWS_AS(report_from_json(R"({"schema_version": 99})"), FormatError);
}

TEST_CASE("emit writes text and json side by side") {
    const auto dir = scratch_dir("report");
    const EvalReport r = make_report(87, 9, 85, 11);
    emit_report(r, dir / "out" / "report.json");
    CHECK(slurp(dir / "out" / "report.txt") == format_report_text(r));
    CHECK(read_report(dir / "out" / "report.json") == r);
    CHECK_THROWS_AS(read_report(dir / "missing.json"), IoError);
}

}
