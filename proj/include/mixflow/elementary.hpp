#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mixflow/exact.hpp"

namespace mixflow {

// raised when a point lands on the measure-zero set where a map is undefined
class UndefinedSetHit : public std::runtime_error {
public:
    explicit UndefinedSetHit(const std::string& what) : std::runtime_error(what) {}
};

struct RotationStage {
    Rect rect;
    int quarter_turns = 1;  // +-1 or +-2, counterclockwise positive
    ExactScalar t_begin = 0;
    ExactScalar t_end = 1;
};

struct BakerStage {
    Rect rect;
    bool inverse = false;
    ExactScalar t_begin = 0;
    ExactScalar t_end = 1;
};

// swap of two adjacent congruent squares; reversed runs the flow backwards in time
struct TranspositionStage {
    Rect k1, k2;
    ExactScalar t_begin = 0;
    ExactScalar t_end = 1;
    bool reversed = false;
};

enum class Side { E, N, W, S };

// level-square coordinates of a point relative to a unit-square center
struct SquarePolar {
    ExactScalar radius;
    Side side = Side::E;
    ExactScalar offset;  // distance travelled along `side` counterclockwise from its starting corner
};

// unit-square coordinates in [0,1]^2
SquarePolar to_square_polar(const Point& u);
Point from_square_polar(const SquarePolar& sp);

// velocity of the unit-rate rotation field (one quarter turn per unit time)
Point rotation_field_eval(const Rect& rect, const Point& x);

// chi^-1 R(q pi/2) chi
Affine2 rotation_affine(const Rect& rect, int quarter_turns);
Point rotation_flow_eval(const RotationStage& stage, const ExactScalar& t, const Point& x);
// inverse of the partial flow: position at t_begin of the trajectory that is at y at time t
Point rotation_flow_inverse(const RotationStage& stage, const ExactScalar& t, const Point& y);

std::vector<RotationStage> transposition_stage_pair(const Rect& k1, const Rect& k2, const ExactScalar& t_begin = 0,
                                                    const ExactScalar& t_end = 1);
std::vector<RotationStage> transposition_substages(const TranspositionStage& s);
std::vector<RotationStage> baker_substages(const BakerStage& s);

Point baker_map(const Rect& rect, const Point& x);
Point baker_inverse(const Rect& rect, const Point& y);

struct AffinePiece {
    Rect domain;
    Affine2 map;
};

// closed-form pieces of the folded Baker map (or its inverse) on rect
std::vector<AffinePiece> baker_pieces(const Rect& rect, bool inverse);

bool squares_adjacent(const Rect& k1, const Rect& k2);
Rect bounding_union(const Rect& a, const Rect& b);

}  // namespace mixflow
