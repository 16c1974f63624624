#pragma once

#include "proxplain/bridge.hpp"
#include "proxplain/edition.hpp"
#include "proxplain/error.hpp"
#include "proxplain/evaluation.hpp"
#include "proxplain/exemplars.hpp"
#include "proxplain/explainer.hpp"
#include "proxplain/latent.hpp"
#include "proxplain/model.hpp"
#include "proxplain/neighborhood.hpp"
#include "proxplain/random.hpp"
#include "proxplain/report.hpp"
#include "proxplain/surrogate.hpp"
#include "proxplain/text.hpp"
#include "proxplain/toy_corpus.hpp"
#include "proxplain/toy_models.hpp"
