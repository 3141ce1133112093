#pragma once

// chatload: group-chat workload characterization toolkit.
//
// Pipeline: parse (text export -> canonical records) -> sessionize ->
// metric layers (message / user / group) -> fits and typology -> report.
// A seeded ON/OFF trace generator closes the loop for estimator validation.

#include "chatload/anonymize.hpp"
#include "chatload/canonical.hpp"
#include "chatload/classify.hpp"
#include "chatload/format.hpp"
#include "chatload/generator.hpp"
#include "chatload/metrics.hpp"
#include "chatload/parse.hpp"
#include "chatload/report.hpp"
#include "chatload/session.hpp"
#include "chatload/statfit.hpp"
#include "chatload/typology.hpp"
#include "chatload/types.hpp"
