#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mixflow/constructions.hpp"
#include "mixflow/markov.hpp"
#include "mixflow/mixing.hpp"

namespace mixflow::io {

using nlohmann::json;

inline constexpr int schedule_format_version = 1;
inline constexpr const char* library_version = "0.3.0";

// rationals travel as "p/q" strings, rects as [x_lo, x_hi, y_lo, y_hi]
json to_json(const ExactScalar& v);
ExactScalar scalar_from_json(const json& j);
json to_json(const Point& p);
Point point_from_json(const json& j);
json to_json(const Rect& r);
Rect rect_from_json(const json& j);
json to_json(const RectUnion& u);
RectUnion rect_union_from_json(const json& j);

json to_json(const Stage& s);
Stage stage_from_json(const json& j);
json to_json(const FlowSchedule& s);
// validates the result; throws std::invalid_argument on a malformed document
FlowSchedule schedule_from_json(const json& j);

json to_json(const SquarePermutation& p);
SquarePermutation permutation_from_json(const json& j);
json to_json(const TimeOneMap& m);
TimeOneMap map_from_json(const json& j);

json to_json(const ConstructionParams& p);
json to_json(const PipelineReport& r);
json to_json(const SpectralReport& r);

// "x0,x1,y0,y1" and "x,y" with rational entries
Rect parse_rect(const std::string& text);
Point parse_point(const std::string& text);

// identity | shift | comma separated images
SquarePermutation parse_permutation(const std::string& text, int D);

std::string correlation_csv(const CorrelationSeries& s);
std::string cesaro_csv(const std::vector<ExactScalar>& c);
std::string deviation_csv(const std::vector<DeviationSeries>& s);
std::string mass_csv(const MassSeries& s);

std::string read_file(const std::string& path);
// write to path.tmp then rename over path
void write_file_atomic(const std::string& path, const std::string& content);

// FNV-1a, hex; enough to tell inputs apart in a manifest
std::string content_hash(const std::string& content);

}  // namespace mixflow::io
