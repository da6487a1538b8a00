#pragma once

#include <string>
#include <vector>

#include "mixflow/exact.hpp"
#include "mixflow/schedule.hpp"

namespace mixflow {

// velocity G x + h on a convex polygon (counterclockwise vertices)
struct FieldPiece {
    std::vector<Point> polygon;
    Mat2 G{0, 0, 0, 0};
    Point h{0, 0};

    Point at(const Point& x) const {
        Point v = G.apply(x);
        return {v.x + h.x, v.y + h.y};
    }
};

// piecewise affine field, zero off the pieces
struct PiecewiseField {
    std::vector<FieldPiece> pieces;

    bool empty() const { return pieces.empty(); }
};

struct TVReport {
    ExactScalar continuous_part = 0;
    ExactScalar jump_part = 0;
    ExactScalar total = 0;
    std::vector<ExactScalar> per_piece;  // continuous part of each piece
};

struct DivergenceReport {
    bool ok = true;
    std::vector<std::string> violations;
};

ExactScalar polygon_area(const std::vector<Point>& poly);

// unit-rate rotation field of a rect as four triangles
PiecewiseField rotation_field(const Rect& rect, const ExactScalar& rate = 1);

// Eulerian field of the stages active at t; throws at group or layer boundaries
PiecewiseField field_at(const FlowSchedule& s, const ExactScalar& t);

// Frobenius norm of the gradient plus Euclidean jumps, support boundary included.
// Throws std::domain_error when an integral is irrational.
TVReport total_variation(const PiecewiseField& f);

// integral of |v_x| + |v_y|
ExactScalar l1_norm(const PiecewiseField& f);

DivergenceReport check_divergence_free(const PiecewiseField& f);

PiecewiseField field_difference(const PiecewiseField& f, const PiecewiseField& g);
ExactScalar field_distance_l1(const PiecewiseField& f, const PiecewiseField& g);

// field seen through a constant monomial affine change of variables y = A x
PiecewiseField transport_field(const PiecewiseField& f, const Affine2& A);
PiecewiseField field_sum(const PiecewiseField& f, const PiecewiseField& g);

// time breakpoints of both schedules; fields are constant in shape between them
std::vector<ExactScalar> common_breakpoints(const FlowSchedule& a, const FlowSchedule& b);

// integral over [start,end] of the L1 distance of the two fields
ExactScalar schedule_distance_l1(const FlowSchedule& a, const FlowSchedule& b);
// largest L1 distance over the elementary time intervals
ExactScalar schedule_distance_linf_l1(const FlowSchedule& a, const FlowSchedule& b);
// largest TV of the difference over the elementary time intervals
ExactScalar schedule_tv_sup(const FlowSchedule& a, const FlowSchedule& b);
ExactScalar schedule_tv_sup(const FlowSchedule& s);

}  // namespace mixflow
