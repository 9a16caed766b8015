#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include "tps/knowledge.hpp"
#include "tps/lda.hpp"
#include "tps/nb.hpp"

namespace tps {

// Binary matrix cache: "ETAM", u32 rows, u32 cols, row-major little-endian f64.
void write_matrix_cache(std::ostream& out, const Eigen::MatrixXd& mat);
Eigen::MatrixXd read_matrix_cache(std::istream& in);
void save_matrix_cache(const std::string& path, const Eigen::MatrixXd& mat);
Eigen::MatrixXd load_matrix_cache(const std::string& path);

// FNV-1a over the row-major little-endian f64 bytes.
std::uint64_t matrix_content_hash(const Eigen::MatrixXd& mat);

// Checkpoints: magic ("TPSL" topics / "TPSN" classes), u32 rows of pi, u32 L, u32 V,
// u64 t, f64 sigma, pi row-major f64, u64 content hash of eta.
void write_tps_lda_checkpoint(std::ostream& out, const TpsLdaState& state);
TpsLdaState read_tps_lda_checkpoint(std::istream& in,
                                    std::shared_ptr<const KnowledgeMatrix> eta);
void write_tps_nb_checkpoint(std::ostream& out, const TpsNbState& state);
TpsNbState read_tps_nb_checkpoint(std::istream& in, std::shared_ptr<const KnowledgeMatrix> eta);

void save_tps_lda_checkpoint(const std::string& path, const TpsLdaState& state);
TpsLdaState load_tps_lda_checkpoint(const std::string& path,
                                    std::shared_ptr<const KnowledgeMatrix> eta);
void save_tps_nb_checkpoint(const std::string& path, const TpsNbState& state);
TpsNbState load_tps_nb_checkpoint(const std::string& path,
                                  std::shared_ptr<const KnowledgeMatrix> eta);

}  // namespace tps
