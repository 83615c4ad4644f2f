#pragma once

#include <json.hpp>

#include "pestab/adversary.hpp"
#include "pestab/certify.hpp"
#include "pestab/gains.hpp"
#include "pestab/reachability.hpp"
#include "pestab/signals.hpp"

namespace pestab {

using Json = nlohmann::json;

Json mat_to_json(const Mat& m);
/// Rows of numbers; throws DomainError on ragged or non-numeric input.
Mat mat_from_json(const Json& j);
Json vec_to_json(const Vec& v);

Json signal_to_json(const PwcSignal& s);
PwcSignal signal_from_json(const Json& j);

Json certificate_to_json(const Certificate& c);
Json gramian_to_json(const GramianReport& r, const PeClass& cls);
Json threshold_to_json(const ThresholdResult& r);
Json gain_to_json(const std::string& kind, const Json& params, const Mat& K);
Json destabilizer_to_json(const Mat& K, double nu_hat, const DestabilizerRun& run);

/// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace pestab
