#pragma once

#include <array>
#include <string>
#include <vector>

#include "scamsim/session.hpp"

namespace scamsim {

/// A statically authored multiple-choice item that gates Quiz(phase, ordinal).
struct QuizItem {
  std::string id;
  Phase phase = Phase::TrustBuilding;
  int ordinal = 1;
  std::string stem;
  std::array<std::string, 4> options;
  int correct_index = 0;
  std::string explanation;
};

QuizItem quiz_item_from_json(const Json& j);
Json to_json(const QuizItem& item);

std::vector<std::string> check_quiz_item(const QuizItem& item);

/// Findings for a bank under a cadence: one valid item per required (phase, ordinal).
std::vector<std::string> check_quiz_bank(const std::vector<QuizItem>& bank, QuizCadence cadence);

const QuizItem* find_quiz_item(const std::vector<QuizItem>& bank, Phase phase, int ordinal);

/// Displayed position i shows original option perm[i].
using OptionPermutation = std::array<int, 4>;

OptionPermutation option_permutation(std::uint64_t session_seed, std::string_view item_id);
std::string permutation_token(const OptionPermutation& perm);
OptionPermutation permutation_from_token(std::string_view token);

/// Participant-safe view of an item: no correct index, no explanation.
struct PresentedItem {
  std::string item_id;
  std::string stem;
  std::array<std::string, 4> options;
  std::string permutation_token;
  std::vector<int> tried_displayed;  // wrong options already chosen, in display positions
};

PresentedItem present_item(const Session& session, const Step& step, const std::vector<QuizItem>& bank);

struct QuizOutcome {
  bool correct = false;
  std::string explanation;  // only set when correct
  int attempts = 0;
};

/// Records one attempt (chosen_index in original option order). A correct answer
/// closes the item and advances the session past the quiz step.
QuizOutcome submit_answer(Session& session, const QuizItem& item, int chosen_index, Timestamp at);

/// True iff the quiz paired with this advice step is solved; advice-only
/// sessions have no quiz, so their gates are open.
bool is_gate_open(const Session& session, const Step& advice_step);

}  // namespace scamsim
