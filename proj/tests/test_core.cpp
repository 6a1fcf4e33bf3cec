#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "jagged/io.hpp"
#include "jagged/rng.hpp"
#include "jagged/tensor.hpp"
#include "support/test_util.hpp"

using namespace jagged;

TEST_CASE("make_jagged builds prefix-sum offsets") {
  const std::vector<int64_t> lengths{2, 1};
  const auto x = make_jagged<double>(lengths, {1, 2, 3, 4, 5, 6}, 2);
  CHECK(x.offsets() == std::vector<int64_t>{0, 2, 3});
  CHECK(x.dim() == 2);
  CHECK(x.total_rows() == 3);
  CHECK(x.row(1)[0] == 3);
  CHECK(x.row(1)[1] == 4);
}

TEST_CASE("make_jagged handles all-empty batches") {
  const std::vector<int64_t> lengths{0, 0};
  const auto x = make_jagged<double>(lengths, {}, 4);
  CHECK(x.offsets() == std::vector<int64_t>{0, 0, 0});
  CHECK(x.values().empty());
}

TEST_CASE("make_jagged rejects element-count mismatch") {
  const std::vector<int64_t> lengths{3};
  CHECK_THROWS_WITH_AS(make_jagged<double>(lengths, {1, 2}, 1),
                       doctest::Contains("expected 3"), std::invalid_argument);
}

TEST_CASE("jagged_to_dense pads and truncates") {
  const std::vector<int64_t> lengths{2, 1};
  const auto x = make_jagged<double>(lengths, {1, 2, 3}, 1);
  const auto d = jagged_to_dense(x, 2, 0.0);
  CHECK(d.shape() == std::vector<int64_t>{2, 2, 1});
  CHECK(d.at(0, 0, 0) == 1);
  CHECK(d.at(0, 1, 0) == 2);
  CHECK(d.at(1, 0, 0) == 3);
  CHECK(d.at(1, 1, 0) == 0);

  const std::vector<int64_t> one{3};
  const auto y = make_jagged<double>(one, {1, 2, 3}, 1);
  const auto t = jagged_to_dense(y, 2, 0.0);
  CHECK(t.shape() == std::vector<int64_t>{1, 2, 1});
  CHECK(t.at(0, 0, 0) == 1);
  CHECK(t.at(0, 1, 0) == 2);

  const auto z = jagged_to_dense(y, 0, 0.0);
  CHECK(z.shape() == std::vector<int64_t>{1, 0, 1});
  CHECK(z.data().empty());
}

TEST_CASE("dense_to_jagged inverts jagged_to_dense and checks bounds") {
  const auto d = DenseTensor<double>({2, 2, 1}, {1, 2, 3, 0});
  const std::vector<int64_t> lengths{2, 1};
  const auto x = dense_to_jagged(d, lengths);
  CHECK(x.offsets() == std::vector<int64_t>{0, 2, 3});
  CHECK(x.values() == std::vector<double>{1, 2, 3});

  const std::vector<int64_t> bad{3};
  const auto d1 = DenseTensor<double>({1, 2, 1}, {1, 2});
  CHECK_THROWS_WITH_AS(dense_to_jagged(d1, bad), doctest::Contains("sample 0"),
                       std::invalid_argument);
}

TEST_CASE("conversion round-trip is bit-exact for any pad value") {
  Rng rng(11);
  const std::vector<int64_t> lengths{3, 0, 5, 1};
  const auto x = testutil::random_jagged<double>(lengths, 4, rng);
  for (double pad : {0.0, -1.5, 7.25}) {
    for (int64_t extra : {0, 3}) {
      const auto d = jagged_to_dense(x, testutil::max_length(lengths) + extra, pad);
      const auto back = dense_to_jagged(d, lengths);
      CHECK(back.offsets() == x.offsets());
      CHECK(back.values() == x.values());
    }
  }
}

TEST_CASE("jagged_to_dense writes pad_value exactly beyond each segment") {
  Rng rng(12);
  const std::vector<int64_t> lengths{2, 0};
  const auto x = testutil::random_jagged<float>(lengths, 3, rng);
  const auto d = jagged_to_dense(x, 4, 9.5f);
  for (int64_t i = 0; i < 2; ++i)
    for (int64_t r = lengths[i]; r < 4; ++r)
      for (int64_t c = 0; c < 3; ++c) CHECK(d.at(i, r, c) == 9.5f);
}

TEST_CASE("jagged2 conversions: pad, invert, empty block") {
  const std::vector<int64_t> lengths{1};
  const auto s = make_jagged2<double>(lengths, {7});
  const auto d = jagged2_to_dense(s, 2, 0.0);
  CHECK(d.shape() == std::vector<int64_t>{1, 2, 2});
  CHECK(d.at(0, 0, 0) == 7);
  CHECK(d.at(0, 0, 1) == 0);
  CHECK(d.at(0, 1, 0) == 0);
  CHECK(d.at(0, 1, 1) == 0);

  Rng rng(13);
  const std::vector<int64_t> mixed{2, 0, 3};
  const auto s2 = testutil::random_jagged2<double>(mixed, rng);
  const auto d2 = jagged2_to_dense(s2, 3, -2.0);
  const auto back = dense_to_jagged2(d2, mixed);
  CHECK(back.values() == s2.values());
  CHECK(back.seq_lengths() == s2.seq_lengths());

  // Bi = 0 sample contributes an all-pad slice.
  for (int64_t r = 0; r < 3; ++r)
    for (int64_t c = 0; c < 3; ++c) CHECK(d2.at(1, r, c) == -2.0);
}

TEST_CASE("elementwise ops") {
  Rng rng(14);
  const std::vector<int64_t> lengths{2, 1, 0};
  const auto x = testutil::random_jagged<double>(lengths, 2, rng);

  const auto zero = add(x, scale(x, -1.0));
  for (double v : zero.values()) CHECK(v == 0.0);
  CHECK(zero.offsets() == x.offsets());

  const auto same = scale(x, 1.0);
  CHECK(same.values() == x.values());

  const auto squared = mul(x, x);
  for (size_t k = 0; k < squared.values().size(); ++k)
    CHECK(squared.values()[k] == x.values()[k] * x.values()[k]);

  const auto diff = sub(x, x);
  for (double v : diff.values()) CHECK(v == 0.0);

  const auto negated = map_unary(x, [](double v) { return -v; });
  for (size_t k = 0; k < negated.values().size(); ++k)
    CHECK(negated.values()[k] == -x.values()[k]);

  const std::vector<int64_t> la{2}, lb{1, 1};
  const auto a = make_jagged<double>(la, {1, 2}, 1);
  const auto b = make_jagged<double>(lb, {1, 2}, 1);
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);

  const std::vector<int64_t> lc{1, 2};
  const auto c = make_jagged<double>(lb, {1, 2}, 1);
  const auto e = make_jagged<double>(lc, {1, 2, 3}, 1);
  CHECK_THROWS_WITH_AS(add(c, e), doctest::Contains("sample 1"), std::invalid_argument);
}

TEST_CASE("elementwise add commutes with conversion to dense") {
  Rng rng(15);
  const std::vector<int64_t> lengths{3, 1, 0, 2};
  const auto a = testutil::random_jagged<double>(lengths, 3, rng);
  const auto b = testutil::random_jagged<double>(lengths, 3, rng);
  const auto lhs = jagged_to_dense(add(a, b), 3, 0.0);
  const auto da = jagged_to_dense(a, 3, 0.0);
  const auto db = jagged_to_dense(b, 3, 0.0);
  for (size_t k = 0; k < lhs.data().size(); ++k)
    CHECK(lhs.data()[k] == da.data()[k] + db.data()[k]);
}

TEST_CASE("make_jagged segments recover the input rows") {
  const std::vector<int64_t> lengths{1, 2};
  const auto x = make_jagged<double>(lengths, {10, 20, 21, 30, 31, 40}, 2);
  CHECK(x.row_span(x.offset(1))[0] == 21);
  CHECK(x.row_span(x.offset(1))[1] == 30);
  CHECK(x.row_span(x.offset(1) + 1)[0] == 31);
  CHECK(x.row_span(x.offset(1) + 1)[1] == 40);
}

TEST_CASE("gen_lengths: fixed, determinism, ranges") {
  CHECK(gen_lengths({LengthKind::fixed, 8, 1}, 3) == std::vector<int64_t>{8, 8, 8});

  const LengthDistribution d{LengthKind::uniform, 17, 99};
  CHECK(gen_lengths(d, 64) == gen_lengths(d, 64));
  for (int64_t n : gen_lengths(d, 64)) {
    CHECK(n >= 1);
    CHECK(n <= 17);
  }

  const LengthDistribution h{LengthKind::half_mean, 9, 5};
  for (int64_t n : gen_lengths(h, 33)) {
    CHECK(n >= 0);
    CHECK(n <= 9);
  }
}

TEST_CASE("gen_lengths half-mean empirical mean stays near max_len/2") {
  // Law-of-large-numbers check via direct sampling.
  const auto lengths = gen_lengths({LengthKind::half_mean, 1000, 7}, 4096);
  const double mean =
      static_cast<double>(std::accumulate(lengths.begin(), lengths.end(), int64_t{0})) / 4096.0;
  CHECK(mean >= 475.0);
  CHECK(mean <= 525.0);

  // The 5% guarantee holds for every seed at batch >= 256.
  for (uint64_t seed : {0ull, 1ull, 42ull, 12345ull}) {
    const auto ls = gen_lengths({LengthKind::half_mean, 100, seed}, 256);
    const double m =
        static_cast<double>(std::accumulate(ls.begin(), ls.end(), int64_t{0})) / 256.0;
    CHECK(m >= 47.5);
    CHECK(m <= 52.5);
  }
}

TEST_CASE("Rng is deterministic and respects bounds") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(7);
  for (int i = 0; i < 1000; ++i) {
    const int64_t v = c.uniform_int(-3, 5);
    CHECK(v >= -3);
    CHECK(v <= 5);
    const double r = c.uniform_real(2.0, 4.0);
    CHECK(r >= 2.0);
    CHECK(r < 4.0);
  }
}

TEST_CASE("fixture json round-trips") {
  Rng rng(16);
  const std::vector<int64_t> lengths{2, 0, 1};
  const auto x = testutil::random_jagged<double>(lengths, 2, rng);
  const auto x2 = jagged_from_fixture_json<double>(to_fixture_json(x));
  CHECK(x2.offsets() == x.offsets());
  CHECK(x2.values() == x.values());
  CHECK(x2.dim() == x.dim());

  const auto s = testutil::random_jagged2<double>(lengths, rng);
  const auto s2 = jagged2_from_fixture_json<double>(to_fixture_json(s));
  CHECK(s2.seq_lengths() == s.seq_lengths());
  CHECK(s2.values() == s.values());

  const auto d = testutil::random_dense<double>({2, 3}, rng);
  const auto d2 = dense_from_fixture_json<double>(to_fixture_json(d));
  CHECK(d2.shape() == d.shape());
  CHECK(d2.data() == d.data());
}

TEST_CASE("fixture reader accepts scientific notation") {
  const auto x = jagged_from_fixture_json<double>(
      R"({"dim": 1, "offsets": [0, 2], "values": [1.5e-3, -2E2]})");
  CHECK(x.values()[0] == doctest::Approx(0.0015));
  CHECK(x.values()[1] == doctest::Approx(-200.0));
}

TEST_CASE("jagged tensor constructor validates invariants") {
  CHECK_THROWS_AS(JaggedTensor<double>({0, 2, 1}, {1, 2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(JaggedTensor<double>({1, 2}, {1, 2}, 1), std::invalid_argument);
  CHECK_THROWS_AS(JaggedTensor<double>({0, 2}, {1, 2}, 0), std::invalid_argument);
  CHECK_THROWS_AS(DenseTensor<double>({2, 2}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Jagged2Tensor<double>({2}, {1, 2}), std::invalid_argument);
}
