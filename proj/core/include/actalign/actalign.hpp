#pragma once

#include "actalign/action_tokens.hpp"
#include "actalign/bpe.hpp"
#include "actalign/dct.hpp"
#include "actalign/error.hpp"
#include "actalign/grpo.hpp"
#include "actalign/policy.hpp"
#include "actalign/repr_analysis.hpp"
#include "actalign/reward.hpp"
#include "actalign/rng.hpp"
#include "actalign/tokenizer.hpp"
#include "actalign/traj_data.hpp"
