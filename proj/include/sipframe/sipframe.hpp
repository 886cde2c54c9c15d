#ifndef SIPFRAME_SIPFRAME_HPP_
#define SIPFRAME_SIPFRAME_HPP_

#include "sipframe/config.hpp"
#include "sipframe/sip_space.hpp"
#include "sipframe/linalg.hpp"
#include "sipframe/optimizer.hpp"
#include "sipframe/frame_ops.hpp"
#include "sipframe/certifier.hpp"
#include "sipframe/atomic_recon.hpp"
#include "sipframe/perturb.hpp"
#include "sipframe/rkbs.hpp"

#endif // SIPFRAME_SIPFRAME_HPP_
