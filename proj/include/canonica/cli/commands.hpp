#pragma once

// Command implementations behind the `canonica` executable. Each command
// takes a fully merged key-value config (config file, then flag overrides)
// and writes `run.cfg` with the resolved values next to its outputs, so
// `canonica <command> --config <out>/run.cfg --force` repeats the run.

#include <string>
#include <vector>

#include "canonica/kv.hpp"

namespace canonica::cli {

// synth: run.out; synth.* keys, or synth.sprites = N for N random sprites.
void cmd_synth(const KeyValues& cfg);
// train: run.clip, run.out, optional run.resume, run.size, train.preset; train.* and model.* keys.
void cmd_train(const KeyValues& cfg);
// track: run.checkpoint, run.clip, run.out, track.label, track.start_frame, track.n_samples.
void cmd_track(const KeyValues& cfg);
// depth: run.checkpoint, run.clip, run.out, depth.n_samples.
void cmd_depth(const KeyValues& cfg);
// eval: run.out plus either eval.checkpoints/eval.clips lists (tracking
// table) or eval.ablation = true with run.clip, eval.fractions, eval.w_classes
// and training keys.
void cmd_eval(const KeyValues& cfg);

// Exit codes: 0 success, 2 usage or config error, 3 data error, 4 numeric failure.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace canonica::cli
