#pragma once

#include "leakdet/aho_corasick.hpp"
#include "leakdet/clustering.hpp"
#include "leakdet/codec.hpp"
#include "leakdet/compress.hpp"
#include "leakdet/config.hpp"
#include "leakdet/corpus.hpp"
#include "leakdet/distance.hpp"
#include "leakdet/error.hpp"
#include "leakdet/evaluation.hpp"
#include "leakdet/random.hpp"
#include "leakdet/record.hpp"
#include "leakdet/signature.hpp"
#include "leakdet/tokens.hpp"
