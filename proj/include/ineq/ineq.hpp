#pragma once

#include "ineq/aggregation.hpp"
#include "ineq/atkinson.hpp"
#include "ineq/bootstrap.hpp"
#include "ineq/compensated_sum.hpp"
#include "ineq/config.hpp"
#include "ineq/csv.hpp"
#include "ineq/elicitation.hpp"
#include "ineq/error.hpp"
#include "ineq/inference.hpp"
#include "ineq/network.hpp"
#include "ineq/report.hpp"
#include "ineq/sitewide.hpp"
#include "ineq/srm.hpp"
