#pragma once

#include "slam2d/errors.hpp"
#include "slam2d/evaluation.hpp"
#include "slam2d/factor_graph.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/io.hpp"
#include "slam2d/kdtree.hpp"
#include "slam2d/mapping.hpp"
#include "slam2d/pipeline.hpp"
#include "slam2d/registration.hpp"
#include "slam2d/scan.hpp"
#include "slam2d/simulator.hpp"
#include "slam2d/trajectory.hpp"
