#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mixflow/elementary.hpp"
#include "mixflow/exact.hpp"
#include "mixflow/permutation.hpp"

namespace mixflow {

using Stage = std::variant<RotationStage, BakerStage, TranspositionStage>;

Rect stage_support(const Stage& s);
std::vector<RotationStage> stage_substages(const Stage& s);
const ExactScalar& stage_begin(const Stage& s);
const ExactScalar& stage_end(const Stage& s);
std::string stage_kind(const Stage& s);
Stage with_times(const Stage& s, const ExactScalar& t_begin, const ExactScalar& t_end);

// substages sharing one time interval, in time order
struct StageLayer {
    ExactScalar t_begin, t_end;
    std::vector<RotationStage> subs;
};
std::vector<StageLayer> stage_layers(const Stage& s);

struct StageGroup {
    ExactScalar t_begin = 0;
    ExactScalar t_end = 1;
    std::vector<Stage> stages;
};

struct FlowSchedule {
    std::vector<StageGroup> groups;

    static FlowSchedule identity(const ExactScalar& t_begin = 0, const ExactScalar& t_end = 1);

    ExactScalar start() const { return groups.front().t_begin; }
    ExactScalar end() const { return groups.back().t_end; }
    // throws on gaps, overlapping supports or stages leaving their group
    void validate() const;
    // group bounds and substage bounds, sorted and unique
    std::vector<ExactScalar> breakpoints() const;
    std::size_t stage_count() const;
};

FlowSchedule compose_schedules(const FlowSchedule& prefix, const FlowSchedule& suffix);
// affine reparametrization of [start,end] onto [a,b]
FlowSchedule rescale(const FlowSchedule& s, const ExactScalar& a, const ExactScalar& b);
// runs the flow backwards over the same interval
FlowSchedule reverse_schedule(const FlowSchedule& s);

Point eval_flow(const FlowSchedule& s, const ExactScalar& t, const Point& x);
Point eval_flow_inverse(const FlowSchedule& s, const ExactScalar& t, const Point& y);

// piecewise affine a.e. bijection of the unit square
class TimeOneMap {
public:
    TimeOneMap() = default;
    explicit TimeOneMap(std::vector<AffinePiece> pieces);
    static TimeOneMap identity();

    const std::vector<AffinePiece>& pieces() const { return pieces_; }
    std::size_t size() const { return pieces_.size(); }

    Point apply(const Point& x) const;
    TimeOneMap inverse() const;
    // next after this
    TimeOneMap then(const TimeOneMap& next) const;
    TimeOneMap coalesced() const;
    bool is_identity() const;
    // every piece measure preserving and the domains tile [0,1]^2
    void validate_tiling() const;

    // calls f(image_rect) for every positive-area piece of the image of r
    template <class F>
    void for_each_image(const Rect& r, F&& f) const {
        for_each_candidate(r, [&](const AffinePiece& p, Rect&& part) { f(affine_image(p.map, part)); });
    }
    void for_each_candidate(const Rect& r, const std::function<void(const AffinePiece&, Rect&&)>& f) const;

private:
    void build_index();
    int bucket_lo(const ExactScalar& v) const;
    int bucket_hi(const ExactScalar& v) const;

    std::vector<AffinePiece> pieces_;
    int B_ = 1;
    std::vector<std::vector<std::uint32_t>> buckets_;
};

TimeOneMap stage_time_one(const Stage& s);
TimeOneMap group_time_one(const StageGroup& g);
TimeOneMap time_one_map(const FlowSchedule& s);

enum class Direction { forward, inverse };

RectUnion pushforward_set(const TimeOneMap& m, const RectUnion& u, Direction direction = Direction::forward);

// restriction to grid squares, when every square is translated onto a square
std::optional<SquarePermutation> square_translation(const TimeOneMap& m, const Grid& g);

// area bookkeeping shared by every pushforward in the library
long measure_audit_checks();
long measure_audit_violations();
void measure_audit_record(const ExactScalar& before, const ExactScalar& after, const char* where);

}  // namespace mixflow
