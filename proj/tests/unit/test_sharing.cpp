#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "kpsec/sharing.hpp"

using namespace kpsec;
using namespace kpsec::sharing;

namespace {

const PrimeField& f251() {
  static const PrimeField f(251);
  return f;
}

FieldElement el(std::uint64_t v) { return f251().element(v); }

template <typename Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) idx.push_back(i);
    }
    fn(idx);
  } while (std::prev_permutation(pick.begin(), pick.end()));
}

}  // namespace

TEST(PrimeField, StandardModulus) {
  const auto& f = PrimeField::standard();
  BigUint expect = 0;
  expect = ~expect;  // 2^256 - 1
  expect -= 188;
  EXPECT_EQ(f.modulus(), expect);
  EXPECT_EQ(f.bits(), 256u);
  EXPECT_EQ(f.byte_width(), 32u);
  EXPECT_EQ(block_width(f), 31u);
}

TEST(PrimeField, RejectsComposite) {
  EXPECT_THROW(PrimeField(250), std::invalid_argument);
  EXPECT_THROW(PrimeField(1), std::invalid_argument);
  EXPECT_NO_THROW(PrimeField(2));
}

TEST(PrimeField, ArithmeticSmallField) {
  const auto& f = f251();
  EXPECT_EQ(f.add(el(200), el(100)), el(49));
  EXPECT_EQ(f.sub(el(3), el(5)), el(249));
  EXPECT_EQ(f.mul(el(250), el(250)), el(1));
  EXPECT_EQ(f.neg(el(0)), el(0));
  for (std::uint64_t a = 1; a < 251; ++a) {
    EXPECT_EQ(f.mul(el(a), f.inv(el(a))), el(1));
    EXPECT_EQ(f.pow(el(a), 250), el(1));
  }
  EXPECT_THROW(f.inv(el(0)), std::domain_error);
}

TEST(PrimeField, MultiplicationMatchesWideReduction) {
  using Wide = boost::multiprecision::cpp_int;
  const auto& f = PrimeField::standard();
  const Wide q(f.modulus());
  Rng rng(23);
  std::vector<FieldElement> edge{f.element(0), f.element(1), f.neg(f.element(1)),
                                 f.neg(f.element(189)), f.element(BigUint(1) << 255)};
  for (int i = 0; i < 2000; ++i) {
    const auto a = i < 25 ? edge[i % 5] : f.random(rng);
    const auto b = i < 25 ? edge[i / 5] : f.random(rng);
    const Wide expect = Wide(a.value) * Wide(b.value) % q;
    ASSERT_EQ(Wide(f.mul(a, b).value), expect);
  }
}

TEST(PrimeField, InverseMatchesFermatOnStandardField) {
  const auto& f = PrimeField::standard();
  Rng rng(17);
  std::vector<FieldElement> values{f.element(1), f.element(2), f.element(188),
                                   f.element(std::numeric_limits<std::uint64_t>::max()),
                                   f.neg(f.element(1)), f.neg(f.element(12345))};
  for (int i = 0; i < 20; ++i) values.push_back(f.random(rng));
  for (int i = 0; i < 20; ++i) values.push_back(f.element(rng()));
  for (const auto& a : values) {
    const auto inv = f.inv(a);
    EXPECT_EQ(inv, f.pow(a, f.modulus() - 2));
    EXPECT_EQ(f.mul(a, inv), f.element(1));
  }
}

TEST(PrimeField, EncodingIsFixedWidthBigEndian) {
  const auto& f = PrimeField::standard();
  const auto bytes = f.encode(f.element(0x0102));
  ASSERT_EQ(bytes.size(), 32u);
  EXPECT_EQ(bytes[30], 0x01);
  EXPECT_EQ(bytes[31], 0x02);
  EXPECT_EQ(f.decode(bytes), f.element(0x0102));
  Bytes too_big(32, 0xff);
  EXPECT_THROW(f.decode(too_big), FormatError);
  EXPECT_THROW(f.decode(Bytes(31, 0)), FormatError);
}

TEST(Polynomial, HandEvaluation) {
  // secret 5 with c_1 = 3 over q = 251.
  SharePolynomial p{{el(5), el(3)}};
  EXPECT_EQ(evaluate(f251(), p, el(1)), el(8));
  EXPECT_EQ(evaluate(f251(), p, el(2)), el(11));
  const auto shares = eval_shares(f251(), p, 2);
  ASSERT_EQ(shares.size(), 2u);
  EXPECT_EQ(shares[0].index, 1u);
  EXPECT_EQ(shares[0].value, el(8));
  EXPECT_EQ(shares[1].index, 2u);
  EXPECT_EQ(shares[1].value, el(11));
  EXPECT_EQ(reconstruct(f251(), shares, 2), el(5));
}

TEST(Polynomial, ThresholdOneIsConstant) {
  const auto p = make_polynomial(f251(), el(42), 1, Seed{1});
  EXPECT_EQ(p.threshold(), 1u);
  for (const auto& s : eval_shares(f251(), p, 5)) EXPECT_EQ(s.value, el(42));
}

TEST(Polynomial, SecretIsConstantTerm) {
  Rng rng(5);
  for (std::size_t t = 1; t <= 12; ++t) {
    const auto secret = PrimeField::standard().random(rng);
    const auto p = make_polynomial(PrimeField::standard(), secret, t, rng);
    EXPECT_EQ(p.threshold(), t);
    EXPECT_EQ(evaluate(PrimeField::standard(), p, PrimeField::standard().element(0)), secret);
  }
}

TEST(Polynomial, DeterministicPerSeed) {
  const auto& f = PrimeField::standard();
  const auto a = make_polynomial(f, f.element(9), 5, Seed{77});
  const auto b = make_polynomial(f, f.element(9), 5, Seed{77});
  const auto c = make_polynomial(f, f.element(9), 5, Seed{78});
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_NE(a.coefficients, c.coefficients);
}

TEST(Polynomial, RejectsBadArguments) {
  EXPECT_THROW(make_polynomial(f251(), el(1), 0, Seed{1}), std::invalid_argument);
  const auto p = make_polynomial(f251(), el(1), 3, Seed{1});
  EXPECT_THROW(eval_shares(f251(), p, 2), std::invalid_argument);
  EXPECT_THROW(eval_shares(f251(), p, 251), std::invalid_argument);
  EXPECT_NO_THROW(eval_shares(f251(), p, 250));
}

TEST(Lagrange, HandComputedCoefficients) {
  const std::uint32_t two[] = {1, 2};
  EXPECT_EQ(lagrange_coefficients(f251(), two), (std::vector<FieldElement>{el(2), el(250)}));
  const std::uint32_t three[] = {1, 2, 3};
  EXPECT_EQ(lagrange_coefficients(f251(), three),
            (std::vector<FieldElement>{el(3), el(248), el(1)}));
  const std::uint32_t one[] = {1};
  EXPECT_EQ(lagrange_coefficients(f251(), one), (std::vector<FieldElement>{el(1)}));
}

TEST(Lagrange, RejectsRepeatedOrZeroIndices) {
  const std::uint32_t repeated[] = {1, 2, 1};
  EXPECT_THROW(lagrange_coefficients(f251(), repeated), std::invalid_argument);
  const std::uint32_t wraps[] = {1, 252};  // 252 == 1 mod q
  EXPECT_THROW(lagrange_coefficients(f251(), wraps), std::invalid_argument);
  const std::uint32_t zero[] = {0, 1};
  EXPECT_THROW(lagrange_coefficients(f251(), zero), std::invalid_argument);
}

TEST(Lagrange, InterpolationIdentity) {
  // sum_i l_i * i^m = 0^m for m < theta.
  const auto& f = PrimeField::standard();
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint32_t> idx(1 + trial % 10);
    std::uniform_int_distribution<std::uint32_t> pick(1, 1000);
    for (std::size_t i = 0; i < idx.size();) {
      const auto v = pick(rng);
      if (std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(i), v) ==
          idx.begin() + static_cast<std::ptrdiff_t>(i)) {
        idx[i++] = v;
      }
    }
    const auto l = lagrange_coefficients(f, idx);
    for (std::size_t m = 0; m < idx.size(); ++m) {
      auto acc = f.element(0);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        acc = f.add(acc, f.mul(l[i], f.pow(f.element(idx[i]), m)));
      }
      EXPECT_EQ(acc, f.element(m == 0 ? 1 : 0));
    }
  }
}

TEST(Reconstruct, SingleShareThresholdOne) {
  std::vector<Share> s{{7, el(123), {}}};
  EXPECT_EQ(reconstruct(f251(), s, 1), el(123));
}

TEST(Reconstruct, InsufficientShares) {
  const auto p = make_polynomial(f251(), el(17), 3, Seed{4});
  auto shares = eval_shares(f251(), p, 5);
  shares.resize(2);
  EXPECT_THROW(reconstruct(f251(), shares, 3), InsufficientShares);
  // Duplicates do not count twice.
  shares.push_back(shares[0]);
  EXPECT_THROW(reconstruct(f251(), shares, 3), InsufficientShares);
}

TEST(Reconstruct, UsesLowestIndices) {
  const auto p = make_polynomial(f251(), el(17), 2, Seed{4});
  auto shares = eval_shares(f251(), p, 4);
  // Corrupt the highest share; lowest-first reconstruction never touches it.
  shares[3].value = f251().add(shares[3].value, el(1));
  std::reverse(shares.begin(), shares.end());
  EXPECT_EQ(reconstruct(f251(), shares, 2), el(17));
}

TEST(Reconstruct, RoundTripEverySubsetProperty) {
  const auto& f = PrimeField::standard();
  Rng rng(31337);
  std::uniform_int_distribution<std::size_t> theta_d(1, 6), extra(0, 4);
  for (int trial = 0; trial < 150; ++trial) {
    const auto secret = f.random(rng);
    const auto theta = theta_d(rng);
    const auto rho = theta + extra(rng);
    const auto shares = eval_shares(f, make_polynomial(f, secret, theta, rng), rho);
    for_each_subset(rho, theta, [&](const std::vector<std::size_t>& idx) {
      std::vector<Share> sub;
      for (auto i : idx) sub.push_back(shares[i]);
      ASSERT_EQ(reconstruct(f, sub, theta), secret);
    });
    if (theta > 1) {
      for_each_subset(rho, theta - 1, [&](const std::vector<std::size_t>& idx) {
        std::vector<Share> sub;
        for (auto i : idx) sub.push_back(shares[i]);
        ASSERT_THROW(reconstruct(f, sub, theta), InsufficientShares);
      });
    }
  }
}

TEST(Reconstruct, CostGrowsQuadratically) {
  const auto& f = PrimeField::standard();
  auto cost = [&](std::size_t theta) {
    const auto shares = eval_shares(f, make_polynomial(f, f.element(1), theta, Seed{1}), theta);
    FieldOpCounter ops;
    reconstruct(f, shares, theta, &ops);
    return static_cast<double>(ops.total());
  };
  for (std::size_t t : {8, 16, 32}) {
    const double ratio = cost(2 * t) / cost(t);
    EXPECT_GT(ratio, 3.0) << t;
    EXPECT_LT(ratio, 5.0) << t;
  }
}

TEST(Reconstruct, FixedIndexCoefficientsMatchFreshOnes) {
  const auto& f = PrimeField::standard();
  const FixedIndexInterpolator fixed(f, 5);
  Rng rng(8);
  for (int session = 0; session < 20; ++session) {
    const auto secret = f.random(rng);
    const auto shares = eval_shares(f, make_polynomial(f, secret, 5, rng), 5);
    FieldOpCounter reuse, fresh;
    EXPECT_EQ(fixed.reconstruct(shares, &reuse), reconstruct(f, shares, 5, &fresh));
    EXPECT_EQ(fixed.reconstruct(shares), secret);
    EXPECT_LT(reuse.total(), fresh.total());
  }
}

TEST(WireEncoding, SingleValueLayout) {
  const auto& f = PrimeField::standard();
  Share s{0x01020304, f.element(0xabcd), {9, 8, 7}};
  const auto bytes = encode_share(f, s);
  ASSERT_EQ(bytes.size(), 4u + 32u + 2u + 3u);
  EXPECT_EQ((Bytes{bytes.begin(), bytes.begin() + 4}), (Bytes{1, 2, 3, 4}));
  EXPECT_EQ(bytes[34], 0xab);
  EXPECT_EQ(bytes[35], 0xcd);
  EXPECT_EQ(bytes[36], 0);
  EXPECT_EQ(bytes[37], 3);
  const auto back = decode_share(f, bytes);
  EXPECT_EQ(back.index, s.index);
  EXPECT_EQ(back.value, s.value);
  EXPECT_EQ(back.signature, s.signature);
}

TEST(WireEncoding, MalformedRejected) {
  const auto& f = PrimeField::standard();
  Share s{1, f.element(5), {1, 2}};
  auto bytes = encode_share(f, s);
  EXPECT_THROW(decode_share(f, ByteView(bytes).first(10)), FormatError);
  bytes.push_back(0);
  EXPECT_THROW(decode_share(f, bytes), FormatError);
}

TEST(Blocks, ChunkRoundTrip) {
  const auto& f = PrimeField::standard();
  Rng rng(3);
  for (std::size_t len : {1, 30, 31, 32, 33, 62, 65, 100}) {
    Bytes secret(len);
    for (auto& b : secret) b = static_cast<std::uint8_t>(rng());
    secret[0] = 0xff;
    const auto blocks = chunk_secret(f, secret);
    EXPECT_EQ(blocks.size(), (len + 30) / 31);
    EXPECT_EQ(unchunk_secret(f, blocks, len), secret);
  }
  EXPECT_THROW(chunk_secret(f, Bytes{}), std::invalid_argument);
  EXPECT_THROW(chunk_secret(f251(), Bytes{1}), std::invalid_argument);
}

TEST(Blocks, OversizedBlockRejected) {
  const auto& f = PrimeField::standard();
  std::vector<FieldElement> blocks{f.element(0x1ff)};
  EXPECT_THROW(unchunk_secret(f, blocks, 1), FormatError);
  EXPECT_THROW(unchunk_secret(f, blocks, 40), FormatError);
}

TEST(Blocks, ShareAndReconstructKeySizedSecret) {
  const auto& f = PrimeField::standard();
  Rng rng(12);
  Bytes secret(33);
  for (auto& b : secret) b = static_cast<std::uint8_t>(rng());
  const auto blocks = chunk_secret(f, secret);
  auto shares = share_blocks(f, blocks, 3, 5, rng);
  ASSERT_EQ(shares.size(), 5u);
  for_each_subset(5, 3, [&](const std::vector<std::size_t>& idx) {
    std::vector<BlockShare> sub;
    for (auto i : idx) sub.push_back(shares[i]);
    EXPECT_EQ(unchunk_secret(f, reconstruct_blocks(f, sub, 3), 33), secret);
  });
  std::vector<BlockShare> two{shares[0], shares[4]};
  EXPECT_THROW(reconstruct_blocks(f, two, 3), InsufficientShares);
}

TEST(Blocks, WireEncodingRoundTrip) {
  const auto& f = PrimeField::standard();
  BlockShare s{3, {f.element(1), f.element(2)}, Bytes(64, 0x5a)};
  const auto bytes = encode_share(f, s);
  EXPECT_EQ(bytes.size(), 4u + 2 * 32u + 2u + 64u);
  EXPECT_EQ(Bytes(bytes.begin(), bytes.begin() + 68), signing_payload(f, s));
  const auto back = decode_block_share(f, bytes, 2);
  EXPECT_EQ(back.index, 3u);
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.signature, s.signature);
  EXPECT_THROW(decode_block_share(f, bytes, 3), FormatError);
  // One block encodes exactly like a single-value share.
  Share single{3, f.element(1), Bytes(64, 0x5a)};
  EXPECT_EQ(encode_share(f, BlockShare{3, {f.element(1)}, single.signature}),
            encode_share(f, single));
}
