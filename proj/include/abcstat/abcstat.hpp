// Convenience header pulling in the whole library.
#pragma once

#include "abcstat/abc.hpp"
#include "abcstat/closed_form.hpp"
#include "abcstat/distributions.hpp"
#include "abcstat/errors.hpp"
#include "abcstat/io.hpp"
#include "abcstat/parallel.hpp"
#include "abcstat/rng.hpp"
#include "abcstat/simulation.hpp"
#include "abcstat/special_functions.hpp"
#include "abcstat/summary_stats.hpp"
#include "abcstat/version.hpp"
