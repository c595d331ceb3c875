#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "halcurve/dataset.hpp"
#include "halcurve/errors.hpp"

using namespace halcurve;
namespace fs = std::filesystem;

namespace {

struct TempCsv {
    fs::path path;
    explicit TempCsv(const std::string& content) {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("halcurve_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++) + ".csv");
        std::ofstream out(path);
        out << content;
    }
    ~TempCsv() { std::error_code ec; fs::remove(path, ec); }
};

std::string error_text(const std::string& content) {
    TempCsv f(content);
    try {
        load_dataset_csv(f.path.string());
        return "";
    } catch (const ValidationError& e) {
        return e.what();
    }
}

}  // namespace

TEST_CASE("well-formed CSV loads with covariates in header order and A, Y split out") {
    TempCsv f("W1,A,W2,Y\n0.5,1.25,-3,1\n0.75,2.5,4,0\n-0.25,0,0.125,1\n");
    const Dataset d = load_dataset_csv(f.path.string());
    CHECK(d.n() == 3);
    CHECK(d.n_covariates() == 2);
    REQUIRE(d.w_names.size() == 2);
    CHECK(d.w_names[0] == "W1");
    CHECK(d.w_names[1] == "W2");
    CHECK(d.W[0] == std::vector<double>{0.5, 0.75, -0.25});
    CHECK(d.W[1] == std::vector<double>{-3.0, 4.0, 0.125});
    CHECK(d.A == std::vector<double>{1.25, 2.5, 0.0});
    CHECK(d.Y == std::vector<double>{1.0, 0.0, 1.0});

    const auto cols = design_columns(d);
    const auto names = design_column_names(d);
    REQUIRE(cols.size() == 3);
    CHECK(names == std::vector<std::string>{"W1", "W2", "A"});
    CHECK(cols[2] == d.A);  // treatment is always the last design column
}

TEST_CASE("trailing blank lines and CRLF endings are tolerated") {
    TempCsv f("A,Y\r\n1,0\r\n2,1\r\n\r\n");
    const Dataset d = load_dataset_csv(f.path.string());
    CHECK(d.n() == 2);
    CHECK(d.n_covariates() == 0);
    CHECK(d.A == std::vector<double>{1.0, 2.0});
}

TEST_CASE("missing or duplicated required columns are named in the error") {
    CHECK(error_text("W1,Y\n1,0\n").find("required column 'A'") != std::string::npos);
    CHECK(error_text("W1,A\n1,0\n").find("required column 'Y'") != std::string::npos);
    CHECK(error_text("A,A,Y\n1,2,0\n").find("'A'") != std::string::npos);
    CHECK(error_text("A,Y,Y\n1,2,0\n").find("'Y'") != std::string::npos);
}

TEST_CASE("malformed bodies are rejected") {
    CHECK(!error_text("A,Y\n1\n").empty());                  // ragged: too few
    CHECK(!error_text("A,Y\n1,2,3\n").empty());              // ragged: too many
    CHECK(!error_text("A,Y\nfoo,1\n").empty());              // non-numeric
    CHECK(!error_text("A,Y\n1,nan\n").empty());              // non-finite
    CHECK(!error_text("A,Y\ninf,1\n").empty());              // non-finite
    CHECK(!error_text("A,Y\n").empty());                     // no data rows
    CHECK(!error_text("A,,Y\n1,2,3\n").empty());             // unnamed column
    CHECK(error_text("A,Y\n1,2\n")== "");                    // control: valid
}

TEST_CASE("missing file raises a validation error") {
    CHECK_THROWS_AS(load_dataset_csv("/nonexistent/halcurve_nope.csv"), ValidationError);
}

TEST_CASE("unit scaler maps the observed range onto [0,1] and clips outside it") {
    const std::vector<std::vector<double>> cols = {{1.0, 2.0, 3.0}, {-2.0, 0.0, 6.0}};
    const UnitScaler s = UnitScaler::fit(cols, {"u", "v"});
    REQUIRE(s.dim() == 2);
    CHECK(s.columns[0].lo == 1.0);
    CHECK(s.columns[0].hi == 3.0);

    const auto scaled = s.apply(cols);
    CHECK(scaled[0] == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(scaled[1][1] == 0.25);

    // new points: inside interpolates, outside clips
    CHECK(s.columns[0].to_unit(1.5) == 0.25);
    CHECK(s.columns[0].to_unit(0.0) == 0.0);
    CHECK(s.columns[0].to_unit(99.0) == 1.0);
}

TEST_CASE("scaler rejects degenerate and mismatched inputs") {
    try {
        UnitScaler::fit({{2.0, 2.0, 2.0}}, {"flat"});
        CHECK(false);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("flat") != std::string::npos);
    }
    CHECK_THROWS_AS(UnitScaler::fit({{1.0, std::nan("")}}, {"u"}), ValidationError);

    const UnitScaler s = UnitScaler::fit({{0.0, 1.0}}, {"u"});
    CHECK_THROWS_AS(s.apply({{0.0, 1.0}, {2.0, 3.0}}), ValidationError);
}
