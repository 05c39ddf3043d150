// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <filesystem>

#include "asrz/alphabet.hpp"
#include "asrz/checkpoint.hpp"
#include "asrz/error.hpp"
#include "doctest.h"

using asrz::Alphabet;
using asrz::ModelDims;

namespace {

asrz::ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const asrz::Error& e) {
    return e.code();
  }
  FAIL("expected an asrz::Error");
  return asrz::ErrorCode::InvalidArgument;
}

asrz::CheckpointMeta meta_for(const Alphabet& a) {
  asrz::CheckpointMeta meta;
  meta.alphabet = a;
  meta.epoch = 7;
  meta.val_loss = 1.25;
  return meta;
}

// 28 characters + blank = 29 labels, like an English character set.
Alphabet english() { return Alphabet::from_utf8(" abcdefghijklmnopqrstuvwxyz'"); }
Alphabet german() { return Alphabet::from_utf8(" abcdefghijklmnopqrstuvwxyz'äöü"); }

}  // namespace

TEST_SUITE("transfer") {

TEST_CASE("alphabet basics") {
  const Alphabet a = Alphabet::from_utf8("ab c");
  CHECK(a.size() == 4);
  CHECK(a.blank() == 4);
  CHECK(a.encode_utf8("cab") == asrz::Labeling{3, 0, 1});
  CHECK(a.decode_utf8({3, 0, 1}) == "cab");
  CHECK(code_of([&] { a.encode_utf8("z"); }) == asrz::ErrorCode::CharOutsideAlphabet);
  CHECK(code_of([] { Alphabet::from_utf8("aa"); }) == asrz::ErrorCode::MalformedAlphabet);
  const Alphabet parsed = Alphabet::parse("# comment\n \na\nä\n");
  CHECK(parsed.chars() == U" aä");
  CHECK(Alphabet::parse(parsed.to_file_text()) == parsed);
  CHECK(english().n_labels() == 29);
  CHECK(german().n_labels() == 32);
}

TEST_CASE("checkpoint roundtrip is bit-exact at binary32") {
  asrz::Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelDims dims{1 + rng.below(20), 1 + rng.below(12), 2 + rng.below(10)};
    const auto params = asrz::init_params(dims, rng);
    Alphabet alphabet(std::u32string(U"abcdefghijklmnop").substr(0, dims.n_labels - 1));
    const auto bytes = asrz::serialize_checkpoint(params, meta_for(alphabet));
    const auto back = asrz::deserialize_checkpoint(bytes);
    CHECK(back.params == asrz::quantize_to_f32(params));
    CHECK(back.meta.alphabet == alphabet);
    CHECK(back.meta.epoch == 7);
    CHECK(back.meta.val_loss == 1.25);
    CHECK(asrz::serialize_checkpoint(back.params, back.meta) == bytes);
  }
}

TEST_CASE("checkpoint file roundtrip") {
  asrz::Rng rng(52);
  const auto params = asrz::init_params({6, 4, 3}, rng);
  const auto path = std::filesystem::temp_directory_path() / "asrz_ckpt_test.ckpt";
  asrz::save_checkpoint(params, meta_for(Alphabet::from_utf8("ab")), path);
  CHECK(asrz::load_checkpoint(path).params == asrz::quantize_to_f32(params));
  std::filesystem::remove(path);
  CHECK(code_of([&] { asrz::load_checkpoint(path); }) == asrz::ErrorCode::Io);
}

TEST_CASE("corrupt checkpoints are rejected") {
  asrz::Rng rng(53);
  const auto params = asrz::init_params({6, 4, 3}, rng);
  const auto good = asrz::serialize_checkpoint(params, meta_for(Alphabet::from_utf8("ab")));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { asrz::deserialize_checkpoint(bad_magic); }) == asrz::ErrorCode::BadMagic);
  auto bad_version = good;
  const uint32_t v99 = 99;
  std::memcpy(bad_version.data() + 4, &v99, 4);
  CHECK(code_of([&] { asrz::deserialize_checkpoint(bad_version); }) ==
        asrz::ErrorCode::UnsupportedVersion);
  CHECK(code_of([&] { asrz::deserialize_checkpoint(good.substr(0, good.size() - 3)); }) ==
        asrz::ErrorCode::MalformedCheckpoint);
}

TEST_CASE("remap to a larger alphabet reinitializes only the output layer") {
  asrz::Rng rng(54);
  const auto source = asrz::init_params({26, 16, english().n_labels()}, rng);
  // 29 -> 33 labels: three umlauts plus a hyphen.
  Alphabet target = Alphabet::from_utf8(" abcdefghijklmnopqrstuvwxyz'äöü-");
  CHECK(target.n_labels() == 33);
  asrz::Rng r1(3);
  const auto remapped = asrz::remap_output_layer(source, target, r1);
  CHECK(remapped.dims.n_labels == 33);
  CHECK(remapped.layer(6).weight.rows() == 16);
  CHECK(remapped.layer(6).weight.cols() == 33);
  for (int k = 1; k <= 5; ++k) CHECK(remapped.layer(k) == source.layer(k));
  asrz::Rng r2(3);
  CHECK(asrz::remap_output_layer(source, target, r2) == remapped);
}

TEST_CASE("remap with the same alphabet still draws a new output layer") {
  asrz::Rng rng(55);
  const auto source = asrz::init_params({8, 6, english().n_labels()}, rng);
  asrz::Rng r(9);
  const auto remapped = asrz::remap_output_layer(source, english(), r);
  CHECK(remapped.layer(6).weight != source.layer(6).weight);
  CHECK(remapped.layer(6).weight.rows() == source.layer(6).weight.rows());
  for (int k = 1; k <= 5; ++k) CHECK(remapped.layer(k) == source.layer(k));
}

}  // TEST_SUITE
