#pragma once

#include <tokstream/bounded_queue.hpp>
#include <tokstream/config.hpp>
#include <tokstream/decoder.hpp>
#include <tokstream/errors.hpp>
#include <tokstream/filtering.hpp>
#include <tokstream/markup.hpp>
#include <tokstream/pairing.hpp>
#include <tokstream/protocol.hpp>
#include <tokstream/rewards.hpp>
#include <tokstream/rng.hpp>
#include <tokstream/sampler.hpp>
#include <tokstream/server.hpp>
#include <tokstream/session.hpp>
#include <tokstream/speechlm.hpp>
#include <tokstream/stitcher.hpp>
#include <tokstream/store.hpp>
#include <tokstream/timebase.hpp>
#include <tokstream/wav.hpp>
