#pragma once

#include "ahis/error.hpp"
#include "ahis/rational.hpp"
#include "ahis/poly.hpp"
#include "ahis/newton.hpp"
#include "ahis/fourier.hpp"
#include "ahis/puiseux.hpp"
#include "ahis/roots.hpp"
#include "ahis/cone.hpp"
#include "ahis/metric.hpp"
#include "ahis/spectral.hpp"
#include "ahis/expansion.hpp"
#include "ahis/estimates.hpp"
#include "ahis/pipeline.hpp"
