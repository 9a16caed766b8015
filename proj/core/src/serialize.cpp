#include "tps/serialize.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace tps {

namespace {

void put_u32(std::ostream& out, std::uint32_t x) {
  std::array<char, 4> bytes;
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

void put_u64(std::ostream& out, std::uint64_t x) {
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((x >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return x;
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("checkpoint: truncated stream");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return x;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

void expect_magic(std::istream& in, const char (&magic)[5]) {
  std::array<char, 4> got;
  in.read(got.data(), got.size());
  if (!in || !std::equal(got.begin(), got.end(), magic))
    throw std::runtime_error(std::string("bad magic, expected ") + magic);
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& mat) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) put_f64(out, mat(r, c));
  }
}

Eigen::MatrixXd get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd mat(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) mat(r, c) = get_f64(in);
  }
  return mat;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

}  // namespace

void write_matrix_cache(std::ostream& out, const Eigen::MatrixXd& mat) {
  put_magic(out, "ETAM");
  put_u32(out, static_cast<std::uint32_t>(mat.rows()));
  put_u32(out, static_cast<std::uint32_t>(mat.cols()));
  put_matrix(out, mat);
}

Eigen::MatrixXd read_matrix_cache(std::istream& in) {
  expect_magic(in, "ETAM");
  const auto rows = static_cast<Eigen::Index>(get_u32(in));
  const auto cols = static_cast<Eigen::Index>(get_u32(in));
  return get_matrix(in, rows, cols);
}

void save_matrix_cache(const std::string& path, const Eigen::MatrixXd& mat) {
  auto out = open_out(path);
  write_matrix_cache(out, mat);
}

Eigen::MatrixXd load_matrix_cache(const std::string& path) {
  auto in = open_in(path);
  return read_matrix_cache(in);
}

std::uint64_t matrix_content_hash(const Eigen::MatrixXd& mat) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t bits) {
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      mix(std::bit_cast<std::uint64_t>(mat(r, c)));
    }
  }
  return h;
}

namespace {

void write_pi_checkpoint(std::ostream& out, const char (&magic)[5], const Eigen::MatrixXd& pi,
                         const KnowledgeMatrix& eta, double sigma, std::int64_t t) {
  put_magic(out, magic);
  put_u32(out, static_cast<std::uint32_t>(pi.rows()));
  put_u32(out, static_cast<std::uint32_t>(eta.dim()));
  put_u32(out, static_cast<std::uint32_t>(eta.vocab_size()));
  put_u64(out, static_cast<std::uint64_t>(t));
  put_f64(out, sigma);
  put_matrix(out, pi);
  put_u64(out, matrix_content_hash(eta.values));
}

struct PiCheckpoint {
  Eigen::MatrixXd pi;
  double sigma = 0.0;
  std::int64_t t = 0;
};

PiCheckpoint read_pi_checkpoint(std::istream& in, const char (&magic)[5],
                                const KnowledgeMatrix& eta) {
  expect_magic(in, magic);
  const auto rows = static_cast<Eigen::Index>(get_u32(in));
  const auto dim = static_cast<Eigen::Index>(get_u32(in));
  const auto vocab = static_cast<Eigen::Index>(get_u32(in));
  if (dim != eta.dim() || vocab != eta.vocab_size())
    throw std::runtime_error("checkpoint: knowledge matrix shape mismatch");
  PiCheckpoint ckpt;
  ckpt.t = static_cast<std::int64_t>(get_u64(in));
  ckpt.sigma = get_f64(in);
  ckpt.pi = get_matrix(in, rows, dim);
  if (get_u64(in) != matrix_content_hash(eta.values))
    throw std::runtime_error("checkpoint: knowledge matrix content mismatch");
  return ckpt;
}

}  // namespace

void write_tps_lda_checkpoint(std::ostream& out, const TpsLdaState& state) {
  write_pi_checkpoint(out, "TPSL", state.pi, *state.eta, state.sigma, state.t);
}

TpsLdaState read_tps_lda_checkpoint(std::istream& in,
                                    std::shared_ptr<const KnowledgeMatrix> eta) {
  if (!eta) throw std::invalid_argument("read_tps_lda_checkpoint: null knowledge matrix");
  PiCheckpoint ckpt = read_pi_checkpoint(in, "TPSL", *eta);
  TpsLdaState state;
  state.pi = std::move(ckpt.pi);
  state.eta = std::move(eta);
  state.sigma = ckpt.sigma;
  state.t = ckpt.t;
  return state;
}

void write_tps_nb_checkpoint(std::ostream& out, const TpsNbState& state) {
  write_pi_checkpoint(out, "TPSN", state.pi, *state.eta, state.sigma, state.t);
}

TpsNbState read_tps_nb_checkpoint(std::istream& in, std::shared_ptr<const KnowledgeMatrix> eta) {
  if (!eta) throw std::invalid_argument("read_tps_nb_checkpoint: null knowledge matrix");
  PiCheckpoint ckpt = read_pi_checkpoint(in, "TPSN", *eta);
  TpsNbState state;
  state.pi = std::move(ckpt.pi);
  state.eta = std::move(eta);
  state.sigma = ckpt.sigma;
  state.t = ckpt.t;
  return state;
}

void save_tps_lda_checkpoint(const std::string& path, const TpsLdaState& state) {
  auto out = open_out(path);
  write_tps_lda_checkpoint(out, state);
}

TpsLdaState load_tps_lda_checkpoint(const std::string& path,
                                    std::shared_ptr<const KnowledgeMatrix> eta) {
  auto in = open_in(path);
  return read_tps_lda_checkpoint(in, std::move(eta));
}

void save_tps_nb_checkpoint(const std::string& path, const TpsNbState& state) {
  auto out = open_out(path);
  write_tps_nb_checkpoint(out, state);
}

TpsNbState load_tps_nb_checkpoint(const std::string& path,
                                  std::shared_ptr<const KnowledgeMatrix> eta) {
  auto in = open_in(path);
  return read_tps_nb_checkpoint(in, std::move(eta));
}

}  // namespace tps
