#pragma once

#include <string>

#include "invym/certify.hpp"
#include "invym/envelope.hpp"
#include "invym/field.hpp"
#include "invym/json_util.hpp"
#include "invym/laminate.hpp"
#include "invym/measure.hpp"
#include "invym/relax.hpp"

namespace invym {

// [{"weight": w, "location": [row-major entries]}, ...]
json measure_to_json(const AtomicMeasure& nu);
AtomicMeasure measure_from_json(const json& j);

// {"mesh": {"dim": d, "cells": c}, "cells": [measure, ...]}; on input a single
// "constant" measure may replace "cells".
json field_to_json(const YoungMeasureField& field);
YoungMeasureField field_from_json(const json& j);

// {"affine": F} or {"nodes": [...]} with scalar nodes in 1D and [y1, y2]
// pairs (row-major over the (cells+1)^2 grid) in 2D.
GradientField deformation_from_json(const json& j);

json estimate_to_json(const EnvelopeEstimate& est);
json certificate_to_json(const Certificate& cert);
json relax_to_json(const RelaxSolution& sol, double p, double q);
json generation_to_json(const GenerationReport& report);

// CSV tables with a header row; numbers printed with 17 significant digits.
std::string measure_csv(const AtomicMeasure& nu);
std::string field_csv(const YoungMeasureField& field);
std::string gradient_field_csv(const GradientField& field);

}  // namespace invym
