#pragma once

#include <string>
#include <vector>

#include "scamsim/assessment.hpp"
#include "scamsim/stats/table.hpp"

namespace scamsim::service {

/// Column order of the participant export, fixed.
const std::vector<std::string>& export_header();

/// One row per completed session. Rows failing attention checks appear only
/// with include_excluded (flagged included=0); active and abandoned sessions
/// never appear.
stats::ObservationTable export_table(const std::vector<Session>& sessions,
                                     const std::vector<InstrumentDef>& instruments, bool include_excluded);

/// Transcript, advice, quiz, feedback and raw survey responses per session.
Json export_transcripts(const std::vector<Session>& sessions);

}  // namespace scamsim::service
