#pragma once

#include <ocmt/errors.hpp>
#include <ocmt/dataset.hpp>
#include <ocmt/csv.hpp>
#include <ocmt/random.hpp>
#include <ocmt/normal.hpp>
#include <ocmt/downweight.hpp>
#include <ocmt/ocmt_select.hpp>
#include <ocmt/lasso.hpp>
#include <ocmt/boosting.hpp>
#include <ocmt/postselect.hpp>
#include <ocmt/dgp.hpp>
#include <ocmt/evaluation.hpp>
#include <ocmt/experiment.hpp>
#include <ocmt/config.hpp>

namespace ocmt {

inline constexpr const char* kVersion = "1.0.0";

} // namespace ocmt
