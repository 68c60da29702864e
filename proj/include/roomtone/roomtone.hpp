#pragma once

#include "roomtone/cluster.hpp"
#include "roomtone/data.hpp"
#include "roomtone/energy.hpp"
#include "roomtone/features.hpp"
#include "roomtone/haar.hpp"
#include "roomtone/io.hpp"
#include "roomtone/neural.hpp"
#include "roomtone/occupancy.hpp"
#include "roomtone/pca.hpp"
#include "roomtone/rng.hpp"
#include "roomtone/synth.hpp"
#include "roomtone/time.hpp"
#include "roomtone/version.hpp"
