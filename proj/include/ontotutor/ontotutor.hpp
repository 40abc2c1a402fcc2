#pragma once

#include "ontotutor/error.hpp"
#include "ontotutor/rng.hpp"
#include "ontotutor/ontology.hpp"
#include "ontotutor/metric_transform.hpp"
#include "ontotutor/approximator.hpp"
#include "ontotutor/rl_engine.hpp"
#include "ontotutor/coordinator.hpp"
#include "ontotutor/student_sim.hpp"
#include "ontotutor/assist_gen.hpp"
#include "ontotutor/harness.hpp"
