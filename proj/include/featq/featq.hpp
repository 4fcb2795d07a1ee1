#pragma once

#include <featq/core/error.hpp>
#include <featq/core/rng.hpp>
#include <featq/data/dataset.hpp>
#include <featq/data/delimited.hpp>
#include <featq/data/idx.hpp>
#include <featq/data/normalizer.hpp>
#include <featq/data/synth.hpp>
#include <featq/eval/evaluate.hpp>
#include <featq/io/artifacts.hpp>
#include <featq/io/checkpoint.hpp>
#include <featq/io/run_config.hpp>
#include <featq/model/pq_model.hpp>
#include <featq/nn/adam.hpp>
#include <featq/nn/loss.hpp>
#include <featq/nn/network.hpp>
#include <featq/rl/cost_schedule.hpp>
#include <featq/rl/exploration.hpp>
#include <featq/rl/masked_sample.hpp>
#include <featq/rl/replay.hpp>
#include <featq/rl/reward.hpp>
#include <featq/rl/trainer.hpp>
#include <featq/uncertainty/certainty.hpp>
