#pragma once

// Binary persistence of the fitted models. Every file starts with the
// CDFAG1 header; see binary_io.hpp.

#include <string>

#include "cdfag/age.hpp"
#include "cdfag/binary_io.hpp"
#include "cdfag/encoding.hpp"
#include "cdfag/kema.hpp"
#include "cdfag/svm.hpp"

namespace cdfag::io {

void write(Writer& w, const encoding::Codebook& m);
void write(Writer& w, const encoding::PcaModel& m);
void write(Writer& w, const kema::AlignmentModel& m);
void write(Writer& w, const age::RangeScaler& m);
void write(Writer& w, const age::AgeModel& m);
void write(Writer& w, const age::ClassTargets& m);
void write(Writer& w, const svm::SvmModel& m);

encoding::Codebook read_codebook(Reader& r);
encoding::PcaModel read_pca(Reader& r);
kema::AlignmentModel read_alignment(Reader& r);
age::RangeScaler read_scaler(Reader& r);
age::AgeModel read_age(Reader& r);
age::ClassTargets read_targets(Reader& r);
svm::SvmModel read_svm(Reader& r);

/// Encoder pair trained by `cdfag age-train`, with the shared scaler and
/// class targets needed to apply it.
struct AgeBundle {
  age::RangeScaler scaler;
  age::ClassTargets targets;
  age::AgeModel source;
  age::AgeModel target;
};

std::string encode(const encoding::Codebook& m);
std::string encode(const encoding::PcaModel& m);
std::string encode(const kema::AlignmentModel& m);
std::string encode(const AgeBundle& m);
std::string encode(const svm::SvmModel& m);

encoding::Codebook decode_codebook(std::string_view bytes);
encoding::PcaModel decode_pca(std::string_view bytes);
kema::AlignmentModel decode_alignment(std::string_view bytes);
AgeBundle decode_age_bundle(std::string_view bytes);
svm::SvmModel decode_svm(std::string_view bytes);

}  // namespace cdfag::io
