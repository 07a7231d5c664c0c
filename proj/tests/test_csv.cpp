#include <doctest.h>

#include <fstream>

#include "readmit/csv.hpp"
#include "readmit/error.hpp"
#include "readmit/timeutil.hpp"
#include "test_support.hpp"

using namespace readmit;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::vector<std::string>> read_all(const std::filesystem::path& p) {
  csv::Reader r(p);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> f;
  while (r.next(f)) rows.push_back(f);
  return rows;
}

}  // namespace

TEST_CASE("quoted fields round trip") {
  testing::TempDir dir("csv");
  const std::vector<std::string> row{"plain", "with,comma", "say \"hi\"", "two\nlines", "", "crlf\r\nend"};
  {
    csv::Writer w(dir / "a.csv");
    w.comment("generated");
    w.row({"a", "b", "c", "d", "e", "f"});
    w.row(std::span<const std::string>(row));
  }
  const auto rows = read_all(dir / "a.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1] == row);
}

TEST_CASE("CRLF terminators and comment lines") {
  testing::TempDir dir("csv");
  write_text(dir / "b.csv", "# note\r\nx,y\r\n1,2\r\n# between\r\n3,4");
  const auto rows = read_all(dir / "b.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"x", "y"});
  CHECK(rows[2] == std::vector<std::string>{"3", "4"});
}

TEST_CASE("parse errors carry file, line and column") {
  testing::TempDir dir("csv");
  write_text(dir / "c.csv", "x,y\n1,2\n3,\"ab\"c\n");
  csv::Reader r(dir / "c.csv");
  std::vector<std::string> f;
  r.next(f);
  r.next(f);
  try {
    r.next(f);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("c.csv:3:2:") != std::string::npos);
  }

  write_text(dir / "d.csv", "x\n\"open\n");
  csv::Reader open(dir / "d.csv");
  open.next(f);
  CHECK_THROWS_AS(open.next(f), Error);

  CHECK_THROWS_AS(csv::Reader(dir / "missing.csv"), Error);
}

TEST_CASE("header mapping") {
  testing::TempDir dir("csv");
  write_text(dir / "h.csv", "b,a\n2,1\n");
  csv::Reader r(dir / "h.csv");
  csv::HeaderMap h(r, {"a", "b"});
  CHECK(h[0] == 1);
  CHECK(h[1] == 0);

  write_text(dir / "u.csv", "a,zzz\n");
  csv::Reader ru(dir / "u.csv");
  try {
    csv::HeaderMap bad(ru, {"a", "b"});
    FAIL("expected unknown column");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("zzz") != std::string::npos);
  }

  write_text(dir / "m.csv", "a\n");
  csv::Reader rm(dir / "m.csv");
  CHECK_THROWS_WITH_AS(csv::HeaderMap(rm, {"a", "b"}), doctest::Contains("missing column 'b'"), Error);
}

TEST_CASE("strict numbers") {
  testing::TempDir dir("csv");
  write_text(dir / "n.csv", "x\n");
  csv::Reader r(dir / "n.csv");
  CHECK(csv::to_int(r, 1, "-42") == -42);
  CHECK(csv::to_real(r, 1, "2.5e-3") == 0.0025);
  CHECK_THROWS_AS(csv::to_int(r, 1, "4x"), Error);
  CHECK_THROWS_AS(csv::to_int(r, 1, ""), Error);
  CHECK_THROWS_AS(csv::to_real(r, 1, "nan?"), Error);
}

TEST_CASE("timestamps") {
  Minutes t = 0;
  REQUIRE(parse_timestamp("2000-01-01 00:00:00", t));
  CHECK(t == 0);
  REQUIRE(parse_timestamp("2000-03-01T01:30", t));
  CHECK(t == (31 + 29) * kMinutesPerDay + 90);
  CHECK(format_timestamp(t) == "2000-03-01 01:30:00");
  CHECK(month_of(t) == 3);
  for (Minutes v : {Minutes{0}, Minutes{12345678}, Minutes{987654321}}) {
    Minutes back = -1;
    REQUIRE(parse_timestamp(format_timestamp(v), back));
    CHECK(back == v);
  }
  CHECK_FALSE(parse_timestamp("2000-01-01 00:00:30", t));
  CHECK_FALSE(parse_timestamp("2000-13-01 00:00", t));
  CHECK_FALSE(parse_timestamp("yesterday", t));
}
