#include "rankopt/checkpoint.hpp"
#include "rankopt/errors.hpp"

#include <doctest.h>

#include <cstring>
#include <sstream>

using namespace rankopt;

namespace {

std::string serialize(const Model& m) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, m);
  return out.str();
}

Model parse(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_checkpoint(in);
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit-exact") {
  auto m = Model::glorot({5, 7, 3}, 11);
  m.weights()(0) = -0.0;
  m.weights()(1) = 1e-310;
  const auto bytes = serialize(m);
  CHECK(bytes.rfind("RANKOPT1\n5 7 3\n", 0) == 0);
  CHECK(bytes.size() == 15 + 8 * static_cast<std::size_t>(m.weights().size()));
  const auto back = parse(bytes);
  CHECK(back.layer_dims() == m.layer_dims());
  CHECK(std::memcmp(back.weights().data(), m.weights().data(),
                    sizeof(double) * static_cast<std::size_t>(m.weights().size())) == 0);
  CHECK(serialize(back) == bytes);
}

TEST_CASE("malformed checkpoints") {
  const auto good = serialize(Model::glorot({2, 3}, 1));
  CHECK_THROWS_AS(parse("RANKOPT2" + good.substr(8)), DataError);
  CHECK_THROWS_AS(parse(good.substr(0, good.size() - 1)), DataError);
  CHECK_THROWS_AS(parse(good + "x"), DataError);
  CHECK_THROWS_AS(parse("RANKOPT1\n2 x\n"), DataError);
  CHECK_THROWS_AS(parse("RANKOPT1\n2\n"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.bin"), DataError);
}
