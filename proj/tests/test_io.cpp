#include "oracles.hpp"

#include "sbridge/csv.hpp"
#include "sbridge/training_set.hpp"

#include <doctest.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sbridge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("sbridge-io-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("shortest round-trip formatting") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 5e-324, 1.0}) {
      const std::string s = csv::format_double(x);
      CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(csv::format_double(2.0) == "2");
  }

  TEST_CASE("CSV stream round trip with header and time column") {
    std::mt19937_64 gen(1);
    const Matrix x = oracle::random_matrix(3, 17, gen);
    std::stringstream ss;
    csv::WriteOptions w;
    w.columns = {"t", "a", "b", "c"};
    w.time_step = 0.5;
    csv::write_columns(ss, x, w);
    const Matrix back = csv::read_rows(ss, true);
    REQUIRE(back.rows() == 17);
    REQUIRE(back.cols() == 4);
    CHECK(back.col(0)(3) == 1.5);
    CHECK(back.rightCols(3).transpose() == x);
  }

  TEST_CASE("CSV parser tolerates blanks and CRLF, rejects junk") {
    std::stringstream ok("1, 2\r\n\n3,4\n");
    const Matrix m = csv::read_rows(ok);
    CHECK(m.rows() == 2);
    CHECK(m(1, 1) == 4.0);
    std::stringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(csv::read_rows(ragged), InvalidArgument);
    std::stringstream text("1,abc\n");
    CHECK_THROWS_AS(csv::read_rows(text), InvalidArgument);
  }

  TEST_CASE("training set file formats") {
    TempDir dir;
    std::mt19937_64 gen(2);
    const TrainingSet ts(oracle::random_matrix(4, 33, gen));

    ts.to_csv(dir.path / "a.csv");
    CHECK(TrainingSet::from_csv(dir.path / "a.csv").data() == ts.data());
    CHECK(TrainingSet::load(dir.path / "a.csv").data() == ts.data());

    ts.to_binary(dir.path / "a.sbts");
    CHECK(TrainingSet::from_binary(dir.path / "a.sbts").data() == ts.data());
    CHECK(TrainingSet::load(dir.path / "a.sbts").data() == ts.data());
    CHECK(fs::file_size(dir.path / "a.sbts") == 8 + 8 * 4 * 33);

    std::ifstream in(dir.path / "a.sbts", std::ios::binary);
    char magic[4];
    std::uint16_t d = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&d), 2);
    CHECK(std::string(magic, 4) == "SBTS");
    CHECK(d == 4);

    write_text(dir.path / "h.csv", "x,y\n1,2\n3,4\n");
    const TrainingSet h = TrainingSet::load(dir.path / "h.csv", true);
    CHECK(h.dim() == 2);
    CHECK(h.count() == 2);
    CHECK(h.sample(1)[0] == 3.0);
  }

  TEST_CASE("training set errors") {
    TempDir dir;
    CHECK_THROWS_AS(TrainingSet::load(dir.path / "missing.csv"), InvalidArgument);
    write_text(dir.path / "empty.csv", "");
    CHECK_THROWS_AS(TrainingSet::load(dir.path / "empty.csv"), InvalidArgument);
    write_text(dir.path / "short.sbts", "SBTS\x02");
    CHECK_THROWS_AS(TrainingSet::from_binary(dir.path / "short.sbts"), InvalidArgument);
    CHECK_THROWS_AS(TrainingSet{Matrix(2, 0)}, InvalidArgument);
    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(TrainingSet{bad}, InvalidArgument);
    write_text(dir.path / "nan.csv", "1,nan\n2,3\n");
    CHECK_THROWS_AS(TrainingSet::load(dir.path / "nan.csv"), InvalidArgument);
  }
}
