#ifndef ASG_ASG_HPP
#define ASG_ASG_HPP

// Everything except the HTTP binding, which pulls in httplib.
#include "asg/adverbs.hpp"
#include "asg/config.hpp"
#include "asg/core.hpp"
#include "asg/dataset.hpp"
#include "asg/dmp.hpp"
#include "asg/envsim.hpp"
#include "asg/harness.hpp"
#include "asg/mlp.hpp"
#include "asg/model.hpp"
#include "asg/search.hpp"
#include "asg/service.hpp"
#include "asg/skills.hpp"
#include "asg/tasks.hpp"

#endif
