#include "scamsim/quiz.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "scamsim/error.hpp"
#include "scamsim/text.hpp"

namespace scamsim {

QuizItem quiz_item_from_json(const Json& j) {
  QuizItem item;
  item.id = j.at("id").get<std::string>();
  item.phase = phase_from_index(j.at("phase").get<int>());
  item.ordinal = j.at("ordinal").get<int>();
  item.stem = j.at("stem").get<std::string>();
  const auto opts = j.at("options").get<std::vector<std::string>>();
  if (opts.size() != 4) {
    fail(ErrorCode::PackInvalid, "quiz item " + item.id + " must have exactly 4 options");
  }
  std::copy(opts.begin(), opts.end(), item.options.begin());
  item.correct_index = j.at("correct_index").get<int>();
  item.explanation = j.at("explanation").get<std::string>();
  return item;
}

Json to_json(const QuizItem& item) {
  return Json{{"id", item.id},
              {"phase", phase_index(item.phase)},
              {"ordinal", item.ordinal},
              {"stem", item.stem},
              {"options", item.options},
              {"correct_index", item.correct_index},
              {"explanation", item.explanation}};
}

std::vector<std::string> check_quiz_item(const QuizItem& item) {
  std::vector<std::string> findings;
  const std::string tag = "quiz item " + item.id + ": ";
  if (item.correct_index < 0 || item.correct_index > 3) findings.push_back(tag + "correct_index outside 0..3");
  std::set<std::string> seen;
  for (const auto& o : item.options) {
    if (trim(o).empty()) findings.push_back(tag + "empty option");
    if (!seen.insert(o).second) findings.push_back(tag + "duplicate option '" + o + "'");
  }
  if (trim(item.explanation).empty()) findings.push_back(tag + "empty explanation");
  if (trim(item.stem).empty()) findings.push_back(tag + "empty stem");
  return findings;
}

std::vector<std::string> check_quiz_bank(const std::vector<QuizItem>& bank, QuizCadence cadence) {
  std::vector<std::string> findings;
  std::set<std::string> ids;
  for (const auto& item : bank) {
    auto f = check_quiz_item(item);
    findings.insert(findings.end(), f.begin(), f.end());
    if (!ids.insert(item.id).second) findings.push_back("duplicate quiz item id " + item.id);
  }
  const int max_ord = cadence == QuizCadence::AfterEachScammerMessage ? 3 : 2;
  int required = 0;
  for (Phase p : kAllPhases) {
    for (int ord = 1; ord <= max_ord; ++ord) {
      ++required;
      const auto n = std::count_if(bank.begin(), bank.end(), [&](const QuizItem& q) {
        return q.phase == p && q.ordinal == ord;
      });
      if (n != 1) {
        findings.push_back("quiz bank needs exactly one item for phase " + std::to_string(phase_index(p)) +
                           " ordinal " + std::to_string(ord) + ", found " + std::to_string(n));
      }
    }
  }
  if (static_cast<int>(bank.size()) < required) {
    findings.push_back("quiz bank has " + std::to_string(bank.size()) + " items, cadence " +
                       std::string(to_string(cadence)) + " needs " + std::to_string(required));
  }
  return findings;
}

const QuizItem* find_quiz_item(const std::vector<QuizItem>& bank, Phase phase, int ordinal) {
  for (const auto& q : bank) {
    if (q.phase == phase && q.ordinal == ordinal) return &q;
  }
  return nullptr;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

OptionPermutation option_permutation(std::uint64_t session_seed, std::string_view item_id) {
  OptionPermutation perm{};
  std::iota(perm.begin(), perm.end(), 0);
  std::uint64_t state = session_seed ^ fnv1a(item_id);
  for (int i = 3; i > 0; --i) {
    const auto j = static_cast<int>(splitmix64(state) % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

std::string permutation_token(const OptionPermutation& perm) {
  std::string token = "perm:";
  for (int p : perm) token += static_cast<char>('0' + p);
  return token;
}

OptionPermutation permutation_from_token(std::string_view token) {
  constexpr std::string_view prefix = "perm:";
  if (token.substr(0, prefix.size()) != prefix || token.size() != prefix.size() + 4) {
    fail(ErrorCode::InvalidArgument, "malformed permutation token");
  }
  OptionPermutation perm{};
  std::array<bool, 4> seen{};
  for (std::size_t i = 0; i < 4; ++i) {
    const int v = token[prefix.size() + i] - '0';
    if (v < 0 || v > 3 || seen[static_cast<std::size_t>(v)]) {
      fail(ErrorCode::InvalidArgument, "permutation token is not a permutation");
    }
    seen[static_cast<std::size_t>(v)] = true;
    perm[i] = v;
  }
  return perm;
}

PresentedItem present_item(const Session& session, const Step& step, const std::vector<QuizItem>& bank) {
  if (step.type != StepType::Quiz) fail(ErrorCode::NoItemForStep, describe(step) + " is not a quiz step");
  const QuizItem* item = find_quiz_item(bank, step.phase, step.ordinal);
  if (!item) fail(ErrorCode::NoItemForStep, "no quiz item for " + describe(step));

  const auto perm = option_permutation(session.seed, item->id);
  PresentedItem view;
  view.item_id = item->id;
  view.stem = item->stem;
  for (std::size_t i = 0; i < 4; ++i) view.options[i] = item->options[static_cast<std::size_t>(perm[i])];
  view.permutation_token = permutation_token(perm);
  if (session.active_quiz && session.active_quiz->item_id == item->id) {
    for (const auto& a : session.active_quiz->attempts) {
      const auto pos = std::find(perm.begin(), perm.end(), a.chosen_index) - perm.begin();
      view.tried_displayed.push_back(static_cast<int>(pos));
    }
  }
  return view;
}

QuizOutcome submit_answer(Session& session, const QuizItem& item, int chosen_index, Timestamp at) {
  if (session.find_quiz(item.phase, item.ordinal)) {
    fail(ErrorCode::AlreadySolved, "quiz item " + item.id + " is already solved");
  }
  if (session.status != SessionStatus::Active) fail(ErrorCode::SessionNotActive, "session is not active");
  const Step& step = session.current_step();
  if (step.type != StepType::Quiz || step.phase != item.phase || step.ordinal != item.ordinal) {
    fail(ErrorCode::OutOfOrderEvent, "quiz answer is not valid at step " + describe(step));
  }
  if (chosen_index < 0 || chosen_index > 3) {
    fail(ErrorCode::IndexOutOfRange, "option index " + std::to_string(chosen_index) + " outside 0..3");
  }
  if (!session.active_quiz || session.active_quiz->item_id != item.id) {
    session.active_quiz = QuizAttemptLog{item.id, item.phase, item.ordinal, {}, false, 0};
  }
  auto& log = *session.active_quiz;
  for (const auto& a : log.attempts) {
    if (a.chosen_index == chosen_index) {
      fail(ErrorCode::OptionAlreadyTried, "option " + std::to_string(chosen_index) + " was already tried");
    }
  }

  const bool correct = chosen_index == item.correct_index;
  record_event(session, "quiz_attempt",
               Json{{"item_id", item.id}, {"chosen_index", chosen_index}, {"correct", correct}}, at);
  log.attempts.push_back(QuizAttempt{chosen_index, at});

  QuizOutcome outcome;
  outcome.attempts = static_cast<int>(log.attempts.size());
  if (!correct) return outcome;

  log.solved = true;
  log.elapsed_ms = at - session.step_entered_at;
  const QuizAttemptLog solved = log;
  session = advance(session, event::QuizSolved{solved}, at);
  outcome.correct = true;
  outcome.explanation = item.explanation;
  return outcome;
}

bool is_gate_open(const Session& session, const Step& advice_step) {
  if (session.condition == Condition::Advice) return true;
  if (session.condition != Condition::QuizAdvice) return false;
  const auto* q = session.find_quiz(advice_step.phase, advice_step.ordinal);
  return q != nullptr && q->solved;
}

}  // namespace scamsim
