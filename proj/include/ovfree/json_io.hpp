#ifndef OVFREE_JSON_IO_HPP
#define OVFREE_JSON_IO_HPP

#include <string>

#include <json.hpp>

#include "ovfree/distribution.hpp"
#include "ovfree/scalar.hpp"
#include "ovfree/series.hpp"

namespace ovfree {

using json = nlohmann::ordered_json;

// All writers round floats to 12 significant digits so repeated runs emit
// byte-identical files.
double round_sig(double v);

json mat_to_json(const Mat& m);
Mat mat_from_json(const json& j);

json inclusion_to_json(const InclusionSpec& inc);
InclusionSpec inclusion_from_json(const json& j);

json multimap_to_json(const MultiMap& m);
MultiMap multimap_from_json(const json& j, int arity, int dB, int dD);

json series_to_json(const NCSeries& s, const std::string& kind = "");
NCSeries series_from_json(const json& j);

json distribution_to_json(const OVDistribution& d);
OVDistribution distribution_from_json(const json& j);

json pair_to_json(const DistPair& p);
DistPair pair_from_json(const json& j);

json model_to_json(const OperatorModel& m);
OperatorModel model_from_json(const json& j);

json scalar_dist_to_json(const ScalarDist& d);
ScalarDist scalar_dist_from_json(const json& j);
json scalar_pair_to_json(const ScalarPair& p);
ScalarPair scalar_pair_from_json(const json& j);

json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);
void write_text_file(const std::string& path, const std::string& text);

/// Fixed 12-significant-digit rendering used in CSV output.
std::string format_number(double v);

} // namespace ovfree

#endif
