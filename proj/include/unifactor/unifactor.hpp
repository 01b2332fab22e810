#pragma once

#include "unifactor/csv.hpp"
#include "unifactor/direct_search.hpp"
#include "unifactor/error.hpp"
#include "unifactor/fa.hpp"
#include "unifactor/fit_report.hpp"
#include "unifactor/format.hpp"
#include "unifactor/matrix.hpp"
#include "unifactor/objectives.hpp"
#include "unifactor/path.hpp"
#include "unifactor/pca.hpp"
#include "unifactor/pcfm.hpp"
