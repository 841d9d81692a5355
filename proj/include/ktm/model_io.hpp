#ifndef KTM_MODEL_IO_HPP
#define KTM_MODEL_IO_HPP

#include <string>

#include "ktm/pipeline.hpp"

namespace ktm {

/// Single-archive model format, version 1. Layout:
///
///   KTMMODEL 1\n
///   @header <bytes>\n      JSON: config, dims, basis, source indices
///   @representatives <bytes>\n   CSV block (id,t,x,y), ids are set positions
///   @params <bytes>\n      raw little-endian doubles, documented order
///   @end 0\n
///
/// Parameter order: w_hidden (row-major), b_hidden, w_alpha, b_alpha, w_mu,
/// b_mu, w_sigma, b_sigma, out_shift, out_scale. Round-trips are bit-exact:
/// save(load(bytes)) == bytes.
std::string serialize_model(const KtmModel& model);
KtmModel deserialize_model(const std::string& bytes);

void save_model(const KtmModel& model, const std::string& path);
KtmModel load_model(const std::string& path);

}  // namespace ktm

#endif  // KTM_MODEL_IO_HPP
