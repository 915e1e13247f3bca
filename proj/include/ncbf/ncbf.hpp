#pragma once

#include "ncbf/boundprop/bounds.hpp"
#include "ncbf/boundprop/cells.hpp"
#include "ncbf/boundprop/interval_eval.hpp"
#include "ncbf/certify/farkas_system.hpp"
#include "ncbf/certify/verify.hpp"
#include "ncbf/controller/lqr.hpp"
#include "ncbf/controller/projection_qp.hpp"
#include "ncbf/controller/qp_filter.hpp"
#include "ncbf/controller/simulate.hpp"
#include "ncbf/dynamics/builtin.hpp"
#include "ncbf/dynamics/parse.hpp"
#include "ncbf/dynamics/problem.hpp"
#include "ncbf/enumerate/atlas.hpp"
#include "ncbf/feasolver/bnb.hpp"
#include "ncbf/feasolver/farkas.hpp"
#include "ncbf/feasolver/lp.hpp"
#include "ncbf/network/activation.hpp"
#include "ncbf/network/affine_region.hpp"
#include "ncbf/network/builtin.hpp"
#include "ncbf/network/io.hpp"
#include "ncbf/network/relu_network.hpp"
#include "ncbf/parallel.hpp"
#include "ncbf/plot/svg.hpp"
#include "ncbf/report/report.hpp"
